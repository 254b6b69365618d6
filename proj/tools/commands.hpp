#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "berncert/attacks.hpp"
#include "berncert/norms.hpp"
#include "berncert/solvers.hpp"

namespace berncert::cli {

/// Exit statuses shared by every subcommand.
enum ExitCode { kOk = 0, kBadArgs = 2, kIoFailure = 3, kConstraint = 4 };

/// --seed when given, else BERNCERT_SEED, else 0.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag);

/// Logical core count, at least 1.
int default_jobs();

struct GenDataOptions {
  std::string kind = "moons";  // moons | blobs | wiggly
  int n = 500;
  double noise = 0.1;
  double scale = 1.0;
  std::uint64_t seed = 0;
  std::string out;
};
void cmd_gen_data(const GenDataOptions& o);

struct FixtureOptions {
  double t = 0.5;
  int d = 2;
  double slope = 4.0;
  int n = 20;
  std::uint64_t seed = 0;
  std::string model_out;
  std::string data_out;
};
/// Linear two-class fixture: a model with boundary x_1 = t in feature space
/// and a dataset whose inputs map to uniform feature points.
void cmd_fixture(const FixtureOptions& o);

struct TrainOptions {
  std::string data;
  std::string test_data;
  std::string model_out;
  std::string metrics_out;
  int epochs = 1000;
  double lr = 0.03;
  int batch = 32;
  std::vector<int> feature_hidden{16, 16};
  int feature_dim = 2;
  std::vector<int> head_hidden{16};
  int power_iters_train = 1;
  int power_iters_freeze = 1000;
  int metrics_n = 4;
  double adv_epsilon = 0.0;  // 0 disables adversarial training
  int adv_steps = 20;
  std::string adv_norm = "2";
  std::uint64_t seed = 0;
};
void cmd_train(const TrainOptions& o);

struct CertifyCliOptions {
  std::string model;
  std::string data;
  std::string out;
  std::string summary_out;
  std::string trace_out;
  int n = 1;
  std::string p = "2";
  double c = 0.0;  // <= 0 or inf: no conservative margin
  std::string solver = "lm";
  double tol = 1.49e-8;
  int max_iters = 200;
  int jobs = 1;
  std::size_t grid_cap = 10'000'000;
};
void cmd_certify(const CertifyCliOptions& o);

struct CurveOptions {
  std::string results;
  std::string out;
  std::vector<double> radii;
  bool require_converged = false;
};
void cmd_curve(const CurveOptions& o);

struct AttackCliOptions {
  std::string model;
  std::string data;
  std::string out;
  std::string summary_out;
  std::string method = "pgd";  // pgd | fgsm
  double epsilon = 0.1;
  int steps = 20;
  std::string norm = "2";
  std::string space = "feature";
  std::string target = "base";  // base | smoothed
  int n = 1;
  int jobs = 1;
};
void cmd_attack(const AttackCliOptions& o);

struct Demo2dOptions {
  std::string model;
  std::string data;  // optional anchors; random feature points otherwise
  std::string out_dir;
  int grid = 128;
  std::vector<int> degrees{1, 2, 4, 8, 16, 32, 64};
  int samples = 20;
  std::uint64_t seed = 0;
};
void cmd_demo2d(const Demo2dOptions& o);

struct RegressOptions {
  std::string data;
  std::string out;
  std::string summary_out;
  int n = 8;
  std::vector<int> hidden{64, 64};
  int epochs = 3000;
  double lr = 0.05;
  int batch = 8;
  int grid = 1001;
  std::uint64_t seed = 0;
};
void cmd_regress(const RegressOptions& o);

/// Total variation of a sampled curve.
double total_variation(const std::vector<double>& values);

}  // namespace berncert::cli
