#include <iostream>
#include <limits>
#include <optional>
#include <stdexcept>

#include <CLI11.hpp>

#include "berncert/errors.hpp"
#include "commands.hpp"

namespace cli = berncert::cli;

namespace {

struct SeedFlag {
  std::optional<std::uint64_t> value;

  void attach(CLI::App* app) {
    app->add_option("--seed", value, "random seed (falls back to BERNCERT_SEED, then 0)");
  }
  std::uint64_t resolve() const { return cli::resolve_seed(value); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bernstein-polynomial smoothing and certified radii for small classifiers"};
  app.require_subcommand(1);

  cli::GenDataOptions gen;
  SeedFlag gen_seed;
  auto* gen_cmd = app.add_subcommand("gen-data", "write a toy dataset CSV");
  gen_cmd->add_option("--kind", gen.kind, "moons, blobs or wiggly")
      ->check(CLI::IsMember({"moons", "blobs", "wiggly"}))
      ->capture_default_str();
  gen_cmd->add_option("--n", gen.n, "number of points")->capture_default_str();
  gen_cmd->add_option("--noise", gen.noise, "noise standard deviation")->capture_default_str();
  gen_cmd->add_option("--scale", gen.scale, "multiply inputs by this factor (classification)")
      ->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "output CSV")->required();
  gen_seed.attach(gen_cmd);

  cli::FixtureOptions fix;
  SeedFlag fix_seed;
  auto* fix_cmd = app.add_subcommand("fixture", "write the linear-boundary model and points");
  fix_cmd->add_option("--t", fix.t, "boundary position x_1 = t")->capture_default_str();
  fix_cmd->add_option("--d", fix.d, "feature dimension")->capture_default_str();
  fix_cmd->add_option("--slope", fix.slope, "logit slope")->capture_default_str();
  fix_cmd->add_option("--n", fix.n, "number of points")->capture_default_str();
  fix_cmd->add_option("--model-out", fix.model_out, "model JSON")->required();
  fix_cmd->add_option("--data-out", fix.data_out, "dataset CSV")->required();
  fix_seed.attach(fix_cmd);

  cli::TrainOptions train;
  SeedFlag train_seed;
  auto* train_cmd = app.add_subcommand("train", "train a spectrally normalized toy classifier");
  train_cmd->add_option("--data", train.data, "training CSV (x_1..x_m,label)")->required();
  train_cmd->add_option("--test", train.test_data, "held-out CSV for nat_acc");
  train_cmd->add_option("--out", train.model_out, "model JSON")->required();
  train_cmd->add_option("--metrics", train.metrics_out, "metrics JSON {train_acc, nat_acc}");
  train_cmd->add_option("--epochs", train.epochs)->capture_default_str();
  train_cmd->add_option("--lr", train.lr, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--batch", train.batch)->capture_default_str();
  train_cmd->add_option("--feature-hidden", train.feature_hidden, "hidden widths of G")
      ->delimiter(',')
      ->capture_default_str();
  train_cmd->add_option("--feature-dim", train.feature_dim, "d")->capture_default_str();
  train_cmd->add_option("--head-hidden", train.head_hidden, "hidden widths of the head")
      ->delimiter(',')
      ->capture_default_str();
  train_cmd->add_option("--power-iters-train", train.power_iters_train)->capture_default_str();
  train_cmd->add_option("--power-iters-freeze", train.power_iters_freeze)->capture_default_str();
  train_cmd->add_option("--metrics-n", train.metrics_n, "smoothing degree used for nat_acc")
      ->capture_default_str();
  train_cmd->add_option("--adv-eps", train.adv_epsilon, "PGD training budget, 0 disables")
      ->capture_default_str();
  train_cmd->add_option("--adv-steps", train.adv_steps)->capture_default_str();
  train_cmd->add_option("--adv-norm", train.adv_norm, "2 or inf")->capture_default_str();
  train_seed.attach(train_cmd);

  cli::CertifyCliOptions cert;
  cert.jobs = cli::default_jobs();
  cert.jobs = cli::default_jobs();
  auto* cert_cmd = app.add_subcommand("certify", "certified feature-space radius per example");
  cert_cmd->add_option("--model", cert.model)->required();
  cert_cmd->add_option("--data", cert.data)->required();
  cert_cmd->add_option("--out", cert.out, "results CSV")->required();
  cert_cmd->add_option("--summary", cert.summary_out, "summary JSON");
  cert_cmd->add_option("--trace", cert.trace_out, "solver iterations as JSON lines");
  cert_cmd->add_option("--n", cert.n, "Bernstein degree")->capture_default_str();
  cert_cmd->add_option("--p", cert.p, "radius norm, a number > 1 or inf")->capture_default_str();
  cert_cmd->add_option("--C", cert.c, "conservative parameter, 0 or inf disables")
      ->capture_default_str();
  cert_cmd->add_option("--solver", cert.solver, "lm, trust_region, gauss_newton or newton")
      ->capture_default_str();
  cert_cmd->add_option("--tol", cert.tol, "f and x tolerance")->capture_default_str();
  cert_cmd->add_option("--max-iters", cert.max_iters)->capture_default_str();
  cert_cmd->add_option("--jobs", cert.jobs, "worker threads")->capture_default_str();
  cert_cmd->add_option("--grid-cap", cert.grid_cap, "max smoother grid entries")
      ->capture_default_str();
  SeedFlag cert_seed;
  cert_seed.attach(cert_cmd);

  cli::CurveOptions curve;
  auto* curve_cmd = app.add_subcommand("curve", "certified accuracy at each radius");
  curve_cmd->add_option("--results", curve.results, "certify CSV")->required();
  curve_cmd->add_option("--radii", curve.radii, "ascending radii")->delimiter(',')->required();
  curve_cmd->add_option("--out", curve.out, "curve CSV")->required();
  curve_cmd->add_flag("--require-converged", curve.require_converged,
                      "never count non-converged rows as certified");

  cli::AttackCliOptions attack;
  attack.jobs = cli::default_jobs();
  auto* attack_cmd = app.add_subcommand("attack", "FGSM or PGD against base or smoothed model");
  attack_cmd->add_option("--model", attack.model)->required();
  attack_cmd->add_option("--data", attack.data)->required();
  attack_cmd->add_option("--out", attack.out, "attack CSV")->required();
  attack_cmd->add_option("--summary", attack.summary_out, "summary JSON");
  attack_cmd->add_option("--method", attack.method, "pgd or fgsm")
      ->check(CLI::IsMember({"pgd", "fgsm"}))
      ->capture_default_str();
  attack_cmd->add_option("--eps,--epsilon", attack.epsilon, "perturbation budget")->capture_default_str();
  attack_cmd->add_option("--steps", attack.steps)->capture_default_str();
  attack_cmd->add_option("--norm", attack.norm, "2 or inf")->capture_default_str();
  attack_cmd->add_option("--space", attack.space, "feature or input")->capture_default_str();
  attack_cmd->add_option("--target", attack.target, "base or smoothed")->capture_default_str();
  attack_cmd->add_option("--n", attack.n, "Bernstein degree for --target smoothed")
      ->capture_default_str();
  attack_cmd->add_option("--jobs", attack.jobs)->capture_default_str();
  SeedFlag attack_seed;
  attack_seed.attach(attack_cmd);

  cli::Demo2dOptions demo;
  SeedFlag demo_seed;
  auto* demo_cmd = app.add_subcommand("demo2d", "class rasters and safe-zone radii for d = 2");
  demo_cmd->add_option("--model", demo.model)->required();
  demo_cmd->add_option("--data", demo.data, "anchors taken from these inputs");
  demo_cmd->add_option("--out-dir", demo.out_dir, "writes grids.csv, radii.csv, summary.json")
      ->required();
  demo_cmd->add_option("--grid", demo.grid, "raster points per axis")->capture_default_str();
  demo_cmd->add_option("--n", demo.degrees, "Bernstein degrees")->delimiter(',')
      ->capture_default_str();
  demo_cmd->add_option("--samples", demo.samples, "number of anchors")->capture_default_str();
  demo_seed.attach(demo_cmd);

  cli::RegressOptions reg;
  SeedFlag reg_seed;
  auto* reg_cmd = app.add_subcommand("regress", "fit a 1-D regressor and smooth it");
  reg_cmd->add_option("--data", reg.data, "CSV with header x,y")->required();
  reg_cmd->add_option("--out", reg.out, "CSV x,base,smoothed")->required();
  reg_cmd->add_option("--summary", reg.summary_out, "total variations as JSON");
  reg_cmd->add_option("--n", reg.n, "Bernstein degree")->capture_default_str();
  reg_cmd->add_option("--hidden", reg.hidden)->delimiter(',')->capture_default_str();
  reg_cmd->add_option("--epochs", reg.epochs)->capture_default_str();
  reg_cmd->add_option("--lr", reg.lr)->capture_default_str();
  reg_cmd->add_option("--batch", reg.batch)->capture_default_str();
  reg_cmd->add_option("--grid", reg.grid, "evaluation points")->capture_default_str();
  reg_seed.attach(reg_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kBadArgs;
  }

  try {
    if (*gen_cmd) {
      gen.seed = gen_seed.resolve();
      cli::cmd_gen_data(gen);
    } else if (*fix_cmd) {
      fix.seed = fix_seed.resolve();
      cli::cmd_fixture(fix);
    } else if (*train_cmd) {
      train.seed = train_seed.resolve();
      cli::cmd_train(train);
    } else if (*cert_cmd) {
      cli::cmd_certify(cert);
    } else if (*curve_cmd) {
      cli::cmd_curve(curve);
    } else if (*attack_cmd) {
      cli::cmd_attack(attack);
    } else if (*demo_cmd) {
      demo.seed = demo_seed.resolve();
      cli::cmd_demo2d(demo);
    } else if (*reg_cmd) {
      reg.seed = reg_seed.resolve();
      cli::cmd_regress(reg);
    }
  } catch (const berncert::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kIoFailure;
  } catch (const berncert::ConstraintViolation& e) {
    std::cerr << "constraint violation: " << e.what() << "\n";
    return cli::kConstraint;
  } catch (const berncert::ResourceError& e) {
    std::cerr << "constraint violation: " << e.what() << "\n";
    return cli::kConstraint;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kBadArgs;
  }
  return cli::kOk;
}
