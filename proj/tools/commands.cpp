#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "berncert/bernstein.hpp"
#include "berncert/certify.hpp"
#include "berncert/csv.hpp"
#include "berncert/datasets.hpp"
#include "berncert/errors.hpp"
#include "berncert/io.hpp"
#include "berncert/model.hpp"
#include "berncert/oracle.hpp"
#include "berncert/training.hpp"

namespace berncert::cli {

namespace {

using nlohmann::json;

// Runs fn(i) for i in [0, count) on up to `jobs` threads. The first
// exception thrown by any worker is rethrown on the caller's thread.
template <typename Fn>
void parallel_for(int count, int jobs, Fn fn) {
  jobs = std::clamp(jobs, 1, std::max(count, 1));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
}

double parse_c(double c) { return (c <= 0.0 || std::isinf(c)) ? kInfiniteC : c; }

std::string format_c(double c) { return std::isinf(c) ? "inf" : format_number(c); }

LabeledData load_nonempty(const std::string& path) {
  LabeledData data = read_labeled_csv(path);
  if (data.size() == 0) throw std::invalid_argument("dataset " + path + " has no rows");
  return data;
}

void ensure_parent(const std::string& path) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(parent, ec);
  if (ec) throw IoError("cannot create directory " + parent.string() + ": " + ec.message());
}

bool parse_bool(const std::string& field) {
  if (field == "true" || field == "1") return true;
  if (field == "false" || field == "0") return false;
  throw std::invalid_argument("expected true/false, got '" + field + "'");
}

std::size_t column(const CsvTable& t, const std::string& name, const std::string& path) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) throw std::invalid_argument(path + " has no column '" + name + "'");
  return static_cast<std::size_t>(it - t.header.begin());
}

}  // namespace

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("BERNCERT_SEED"); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0') throw std::invalid_argument("BERNCERT_SEED is not an integer: " + std::string(env));
    return v;
  }
  return 0;
}

int default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

double total_variation(const std::vector<double>& values) {
  double tv = 0.0;
  for (std::size_t i = 1; i < values.size(); ++i) tv += std::abs(values[i] - values[i - 1]);
  return tv;
}

void cmd_gen_data(const GenDataOptions& o) {
  if (o.n < 1) throw std::invalid_argument("--n must be >= 1");
  if (!(o.noise >= 0.0)) throw std::invalid_argument("--noise must be >= 0");
  ensure_parent(o.out);
  if (o.kind == "wiggly") {
    write_regression_csv(o.out, make_wiggly(o.n, o.noise, o.seed));
    return;
  }
  LabeledData data;
  if (o.kind == "moons") {
    data = make_moons(o.n, o.noise, o.seed);
  } else if (o.kind == "blobs") {
    data = make_blobs(o.n, {Eigen::Vector2d(-2.0, 0.0), Eigen::Vector2d(2.0, 0.0)},
                      o.noise, o.seed);
  } else {
    throw std::invalid_argument("unknown dataset kind '" + o.kind + "'");
  }
  data.x *= o.scale;
  write_labeled_csv(o.out, data);
}

void cmd_fixture(const FixtureOptions& o) {
  if (!(o.t > 0.0 && o.t < 1.0)) throw std::invalid_argument("--t must lie in (0,1)");
  if (o.n < 1) throw std::invalid_argument("--n must be >= 1");
  const MlpModel model = linear_boundary_model(o.d, o.t, o.slope);
  std::mt19937_64 gen(o.seed);
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  LabeledData data;
  data.x.resize(o.n, o.d);
  data.y.resize(o.n);
  for (int i = 0; i < o.n; ++i) {
    Eigen::VectorXd x(o.d);
    do {
      for (int j = 0; j < o.d; ++j) x[j] = unif(gen);
    } while (std::abs(x[0] - o.t) < 1e-3);
    data.x.row(i) = logit(x).transpose();
    data.y[i] = x[0] > o.t ? 0 : 1;
  }
  ensure_parent(o.model_out);
  ensure_parent(o.data_out);
  save_model(o.model_out, model);
  write_labeled_csv(o.data_out, data);
}

void cmd_train(const TrainOptions& o) {
  const LabeledData data = load_nonempty(o.data);
  ModelSpec spec;
  spec.input_dim = data.input_dim();
  spec.feature_hidden = o.feature_hidden;
  spec.feature_dim = o.feature_dim;
  spec.head_hidden = o.head_hidden;
  spec.num_classes = std::max(2, data.num_classes());
  TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.learning_rate = o.lr;
  cfg.batch_size = o.batch;
  cfg.power_iters_train = o.power_iters_train;
  cfg.power_iters_freeze = o.power_iters_freeze;
  if (o.adv_epsilon > 0.0) {
    AdversarialConfig adv;
    adv.epsilon = o.adv_epsilon;
    adv.steps = o.adv_steps;
    adv.norm = NormOrder::parse(o.adv_norm);
    adv.step_size = 2.5 * o.adv_epsilon / o.adv_steps;
    cfg.adversarial = adv;
  }
  const TrainResult result = train_toy(data, spec, cfg, o.seed);

  // Natural accuracy of the smoothed classifier at degree metrics_n.
  const LabeledData eval = o.test_data.empty() ? data : load_nonempty(o.test_data);
  const BernsteinSmoother smoother = smooth_model(result.model, o.metrics_n);
  int correct = 0;
  for (int i = 0; i < eval.size(); ++i) {
    if (predict_smoothed(eval.x.row(i).transpose(), result.model, smoother) == eval.y[i]) {
      ++correct;
    }
  }
  ensure_parent(o.model_out);
  save_model(o.model_out, result.model);
  if (!o.metrics_out.empty()) {
    json m;
    m["train_acc"] = result.train_accuracy;
    m["nat_acc"] = static_cast<double>(correct) / eval.size();
    m["nat_acc_n"] = o.metrics_n;
    m["base_acc"] = accuracy(result.model, eval);
    m["final_loss"] = result.final_loss;
    m["epochs"] = o.epochs;
    m["seed"] = o.seed;
    ensure_parent(o.metrics_out);
    write_json_file(o.metrics_out, m);
  }
}

void cmd_certify(const CertifyCliOptions& o) {
  const MlpModel model = load_model(o.model);
  const LabeledData data = load_nonempty(o.data);
  if (data.input_dim() != model.input_dim()) {
    throw ShapeError("dataset has " + std::to_string(data.input_dim()) +
                     " columns, model expects " + std::to_string(model.input_dim()));
  }
  if (model.head_index() == 0) throw ConstraintViolation("model has no feature extractor");
  if (model.feature_dim() > model.num_classes()) {
    throw ConstraintViolation("feature dimension d=" + std::to_string(model.feature_dim()) +
                              " exceeds the number of classes K=" +
                              std::to_string(model.num_classes()) +
                              "; certification needs d <= K");
  }
  if (o.n < 1) throw std::invalid_argument("--n must be >= 1");

  CertifyOptions opts;
  opts.p = NormOrder::parse(o.p);
  opts.c = parse_c(o.c);
  opts.solver.method = parse_method(o.solver);
  opts.solver.f_tol = o.tol;
  opts.solver.x_tol = o.tol;
  opts.solver.max_iters = o.max_iters;
  opts.solver.subproblem_norm = opts.p.is_inf() ? NormOrder::inf() : NormOrder::l2();
  opts.solver.validate();

  const auto start = std::chrono::steady_clock::now();
  const BernsteinSmoother smoother = smooth_model(model, o.n, o.grid_cap);
  const int count = data.size();
  std::vector<CertResult> results(count);
  std::vector<std::string> traces(o.trace_out.empty() ? 0 : count);
  parallel_for(count, o.jobs, [&](int i) {
    CertifyOptions local = opts;
    std::ostringstream trace;
    if (!traces.empty()) local.solver.trace = &trace;
    CertResult r = certify(data.x.row(i).transpose(), model, smoother, local);
    r.index = i;
    r.label = data.y[i];
    results[i] = std::move(r);
    if (!traces.empty()) traces[i] = trace.str();
  });
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::string csv = "index,label,prediction,radius,p,residual,converged,xi,c\n";
  int correct = 0, converged = 0;
  double radius_sum = 0.0;
  for (const CertResult& r : results) {
    csv += std::to_string(r.index) + "," + std::to_string(r.label) + "," +
           std::to_string(r.prediction) + "," + format_number(r.radius, 9) + "," + r.p.str() +
           "," + format_number(r.residual_norm_sq) + "," + (r.converged ? "true" : "false") +
           "," + format_number(r.xi) + "," + format_c(r.c_param) + "\n";
    correct += r.prediction == r.label;
    converged += r.converged;
    radius_sum += r.radius;
  }
  ensure_parent(o.out);
  write_text(o.out, csv);

  if (!traces.empty()) {
    std::string all;
    for (int i = 0; i < count; ++i) {
      std::istringstream lines(traces[i]);
      for (std::string line; std::getline(lines, line);) {
        if (line.size() < 2) continue;
        all += "{\"example\":" + std::to_string(i) + "," + line.substr(1) + "\n";
      }
    }
    ensure_parent(o.trace_out);
    write_text(o.trace_out, all);
  }

  if (!o.summary_out.empty()) {
    json s;
    s["count"] = count;
    s["n"] = o.n;
    s["p"] = opts.p.str();
    s["C"] = format_c(opts.c);
    s["solver"] = method_name(opts.solver.method);
    s["tol"] = o.tol;
    s["natural_accuracy"] = static_cast<double>(correct) / count;
    s["mean_radius"] = radius_sum / count;
    s["convergence_rate"] = static_cast<double>(converged) / count;
    s["seconds_per_example"] = elapsed / count;
    s["radius_space"] = "feature";
    ensure_parent(o.summary_out);
    write_json_file(o.summary_out, s);
  }
}

void cmd_curve(const CurveOptions& o) {
  if (o.radii.empty()) throw std::invalid_argument("--radii must list at least one radius");
  const CsvTable table = read_csv(o.results);
  const std::size_t c_label = column(table, "label", o.results);
  const std::size_t c_pred = column(table, "prediction", o.results);
  const std::size_t c_radius = column(table, "radius", o.results);
  const std::size_t c_conv = column(table, "converged", o.results);
  std::vector<CertResult> results;
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) {
      throw std::invalid_argument(o.results + ": row has " + std::to_string(row.size()) +
                                  " fields, header has " + std::to_string(table.header.size()));
    }
    CertResult r;
    r.label = parse_int(row[c_label], "label");
    r.prediction = parse_int(row[c_pred], "prediction");
    r.radius = parse_double(row[c_radius], "radius");
    r.converged = parse_bool(row[c_conv]);
    results.push_back(r);
  }
  const std::vector<CurvePoint> curve = certified_curve(results, o.radii, o.require_converged);
  std::string csv = "radius,certified_accuracy\n";
  for (const CurvePoint& pt : curve) {
    csv += format_number(pt.radius, 10) + "," + format_number(pt.accuracy, 10) + "\n";
  }
  ensure_parent(o.out);
  write_text(o.out, csv);
}

void cmd_attack(const AttackCliOptions& o) {
  const MlpModel model = load_model(o.model);
  const LabeledData data = load_nonempty(o.data);
  if (data.input_dim() != model.input_dim()) {
    throw ShapeError("dataset has " + std::to_string(data.input_dim()) +
                     " columns, model expects " + std::to_string(model.input_dim()));
  }
  AttackConfig cfg = AttackConfig::standard(NormOrder::parse(o.norm), o.epsilon, o.steps,
                                            parse_space(o.space));
  cfg.validate();
  if (o.method != "pgd" && o.method != "fgsm") {
    throw std::invalid_argument("unknown attack '" + o.method + "'");
  }
  if (o.target != "base" && o.target != "smoothed") {
    throw std::invalid_argument("unknown attack target '" + o.target + "'");
  }
  const bool feature = cfg.space == AttackSpace::feature;
  if (feature && model.head_index() == 0) {
    throw ConstraintViolation("feature-space attack needs a feature extractor");
  }

  std::optional<BernsteinSmoother> smoother;
  if (o.target == "smoothed") smoother.emplace(smooth_model(model, o.n));
  DifferentiableClassifier clf;
  if (smoother) {
    clf = feature ? smoothed_feature_classifier(*smoother)
                  : smoothed_input_classifier(model, *smoother);
  } else {
    clf = feature ? base_feature_classifier(model) : base_input_classifier(model);
  }

  const int count = data.size();
  std::vector<int> clean(count), adv(count);
  parallel_for(count, o.jobs, [&](int i) {
    const Eigen::VectorXd input = data.x.row(i).transpose();
    const Eigen::VectorXd start = feature ? model.features(input) : input;
    clean[i] = clf.predict(start);
    const AttackOutcome out = o.method == "fgsm" ? fgsm(clf, start, data.y[i], o.epsilon, cfg.norm)
                                                 : pgd(clf, start, data.y[i], cfg);
    adv[i] = clf.predict(out.point);
  });

  std::string csv = "index,label,pred_clean,pred_adv,epsilon,norm,success\n";
  int nat = 0, robust = 0;
  for (int i = 0; i < count; ++i) {
    const bool success = adv[i] != data.y[i];
    nat += clean[i] == data.y[i];
    robust += !success;
    csv += std::to_string(i) + "," + std::to_string(data.y[i]) + "," + std::to_string(clean[i]) +
           "," + std::to_string(adv[i]) + "," + format_number(o.epsilon) + "," + cfg.norm.str() +
           "," + (success ? "true" : "false") + "\n";
  }
  ensure_parent(o.out);
  write_text(o.out, csv);
  if (!o.summary_out.empty()) {
    json s;
    s["count"] = count;
    s["method"] = o.method;
    s["space"] = space_name(cfg.space);
    s["target"] = o.target;
    s["epsilon"] = o.epsilon;
    s["norm"] = cfg.norm.str();
    s["natural_accuracy"] = static_cast<double>(nat) / count;
    s["robust_accuracy"] = static_cast<double>(robust) / count;
    ensure_parent(o.summary_out);
    write_json_file(o.summary_out, s);
  }
}

void cmd_demo2d(const Demo2dOptions& o) {
  const MlpModel model = load_model(o.model);
  if (model.head_index() == 0 || model.feature_dim() != 2) {
    throw ConstraintViolation("demo2d needs a model with two-dimensional features");
  }
  if (o.grid < 2) throw std::invalid_argument("--grid must be >= 2");
  if (o.degrees.empty()) throw std::invalid_argument("--n must list at least one degree");

  std::vector<Eigen::VectorXd> anchors;
  if (!o.data.empty()) {
    const LabeledData data = load_nonempty(o.data);
    for (int i = 0; i < std::min(o.samples, data.size()); ++i) {
      anchors.push_back(model.features(data.x.row(i).transpose()));
    }
  } else {
    std::mt19937_64 gen(o.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < o.samples; ++i) anchors.emplace_back(Eigen::Vector2d(unif(gen), unif(gen)));
  }

  const ClassRaster base = ClassRaster::build(
      [&](const Eigen::VectorXd& x) { return argmax(model.logits(x)); }, 2, o.grid);
  auto emit_raster = [&](std::string& out, const std::string& source, const ClassRaster& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      const Eigen::VectorXd p = r.point(i);
      out += source + "," + std::to_string(i / o.grid) + "," + std::to_string(i % o.grid) + "," +
             format_number(p[0]) + "," + format_number(p[1]) + "," + std::to_string(r.at(i)) +
             "\n";
    }
  };
  std::string grids = "source,i,j,x_1,x_2,class\n";
  std::string radii = "n,index,x_1,x_2,prediction,radius,converged\n";
  emit_raster(grids, "base", base);
  json disagreement = json::object();
  for (const int n : o.degrees) {
    const BernsteinSmoother smoother = smooth_model(model, n);
    const ClassRaster r = ClassRaster::build(
        [&](const Eigen::VectorXd& x) { return smoother.predict(x); }, 2, o.grid);
    emit_raster(grids, std::to_string(n), r);
    int differ = 0;
    for (std::size_t i = 0; i < r.size(); ++i) differ += r.at(i) != base.at(i);
    disagreement[std::to_string(n)] = static_cast<double>(differ) / r.size();
    for (std::size_t a = 0; a < anchors.size(); ++a) {
      const CertResult c = certify_point(anchors[a], smoother, CertifyOptions{});
      radii += std::to_string(n) + "," + std::to_string(a) + "," + format_number(anchors[a][0]) +
               "," + format_number(anchors[a][1]) + "," + std::to_string(c.prediction) + "," +
               format_number(c.radius, 9) + "," + (c.converged ? "true" : "false") + "\n";
    }
  }
  const std::filesystem::path dir(o.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  write_text((dir / "grids.csv").string(), grids);
  write_text((dir / "radii.csv").string(), radii);
  json s;
  s["grid"] = o.grid;
  s["disagreement"] = disagreement;
  write_json_file((dir / "summary.json").string(), s);
}

void cmd_regress(const RegressOptions& o) {
  const RegressionData data = read_regression_csv(o.data);
  if (data.x.size() == 0) throw std::invalid_argument("dataset " + o.data + " has no rows");
  if (data.x.minCoeff() < 0.0 || data.x.maxCoeff() > 1.0) {
    throw std::invalid_argument("regression inputs must lie in [0,1]");
  }
  if (o.grid < 2) throw std::invalid_argument("--grid must be >= 2");
  TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.learning_rate = o.lr;
  cfg.batch_size = o.batch;
  const MlpModel model = train_regressor(data, o.hidden, cfg, o.seed);
  const BernsteinSmoother smoother = BernsteinSmoother::precompute(
      [&](const Eigen::VectorXd& x) { return model.forward(x); }, o.n, 1);

  std::string csv = "x,base,smoothed\n";
  std::vector<double> base_values, smooth_values;
  for (int i = 0; i < o.grid; ++i) {
    const double x = static_cast<double>(i) / (o.grid - 1);
    const Eigen::VectorXd pt = Eigen::VectorXd::Constant(1, x);
    base_values.push_back(model.forward(pt)[0]);
    smooth_values.push_back(smoother.eval(pt)[0]);
    csv += format_number(x) + "," + format_number(base_values.back()) + "," +
           format_number(smooth_values.back()) + "\n";
  }
  ensure_parent(o.out);
  write_text(o.out, csv);
  if (!o.summary_out.empty()) {
    json s;
    s["n"] = o.n;
    s["tv_base"] = total_variation(base_values);
    s["tv_smoothed"] = total_variation(smooth_values);
    ensure_parent(o.summary_out);
    write_json_file(o.summary_out, s);
  }
}

}  // namespace berncert::cli
