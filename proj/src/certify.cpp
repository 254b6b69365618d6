#include "berncert/certify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "berncert/attacks.hpp"
#include "berncert/errors.hpp"

namespace berncert {

BernsteinSmoother smooth_model(const MlpModel& model, int n, std::size_t cap) {
  const MlpModel* m = &model;
  return BernsteinSmoother::precompute([m](const Eigen::VectorXd& x) { return m->logits(x); }, n,
                                       model.feature_dim(), cap);
}

CertResult certify_point(const Eigen::VectorXd& x0, const BernsteinSmoother& smoother,
                         const CertifyOptions& opts) {
  const int d = smoother.dim();
  const int k = smoother.num_classes();
  if (k < 2) throw ConstraintViolation("certification needs at least two classes");
  if (d > k) {
    throw ConstraintViolation("feature dimension d=" + std::to_string(d) +
                              " exceeds the number of classes K=" + std::to_string(k) +
                              "; the boundary system needs ranks 1..d");
  }
  if (!(opts.p.value() > 1.0)) throw std::invalid_argument("certified radius needs p > 1");

  const BoundarySystem system(smoother, x0, opts.c);
  const Box unit = Box::unit(d);
  const LeastSquaresProblem problem{
      [&system](const Eigen::VectorXd& x) { return system.residual(x); },
      [&system](const Eigen::VectorXd& x) { return system.jacobian(x); }};
  const SolveReport report = solve(problem, x0, opts.solver, unit);

  CertResult r;
  r.prediction = system.rho()[0];
  r.p = opts.p;
  r.anchor = x0;
  r.boundary_point = unit.clamp(report.solution);
  r.radius = p_norm(x0 - r.boundary_point, opts.p);
  r.residual_norm_sq = system.objective(r.boundary_point);
  // A stationary point with a large residual is not on the boundary.
  r.converged = report.converged && r.residual_norm_sq <= opts.solver.f_tol;
  r.xi = system.xi();
  r.c_param = opts.c;
  r.iterations = report.iterations;
  r.termination = report.termination;
  return r;
}

CertResult certify(const Eigen::VectorXd& input, const MlpModel& model,
                   const BernsteinSmoother& smoother, const CertifyOptions& opts) {
  if (model.feature_dim() != smoother.dim()) {
    throw ShapeError("smoother dimension does not match the model's feature dimension");
  }
  return certify_point(model.features(input), smoother, opts);
}

int predict_smoothed(const Eigen::VectorXd& input, const MlpModel& model,
                     const BernsteinSmoother& smoother) {
  return smoother.predict(model.features(input));
}

CertResult certify_2d(const Eigen::VectorXd& x0, const BoundarySystem& system,
                      const SolverConfig& cfg, double weight) {
  if (system.dim() != 2 || x0.size() != 2) {
    throw ConstraintViolation("certify_2d works on two-dimensional features only");
  }
  if (!(weight >= 0.0)) throw std::invalid_argument("regularization weight must be >= 0");
  const double scale = std::sqrt(2.0 * weight);
  // 0.5 ||(phi_0, sqrt(2 w) (x - x0))||^2 = 0.5 phi_0^2 + w ||x - x0||^2
  const LeastSquaresProblem problem{
      [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd r(3);
        r[0] = system.residual(x)[0];
        r.tail(2) = scale * (x - x0);
        return r;
      },
      [&](const Eigen::VectorXd& x) {
        Eigen::MatrixXd j(3, 2);
        j.row(0) = system.jacobian(x).row(0);
        j.bottomRows(2) = scale * Eigen::MatrixXd::Identity(2, 2);
        return j;
      }};
  SolverConfig tr = cfg;
  tr.method = SolverMethod::trust_region;
  const Box unit = Box::unit(2);
  const SolveReport report = trust_region_solve(problem, x0, tr, unit);

  CertResult r;
  r.prediction = system.rho()[0];
  r.p = NormOrder::l2();
  r.anchor = x0;
  r.boundary_point = unit.clamp(report.solution);
  r.radius = (x0 - r.boundary_point).norm();
  r.residual_norm_sq = report.residual_norm_sq;
  r.converged = report.converged;
  r.xi = system.xi();
  r.c_param = system.c_param();
  r.iterations = report.iterations;
  r.termination = report.termination;
  return r;
}

std::vector<CurvePoint> certified_curve(const std::vector<CertResult>& results,
                                        const std::vector<double>& radii, bool require_converged) {
  if (results.empty()) throw std::invalid_argument("certified curve of an empty result set");
  if (!std::is_sorted(radii.begin(), radii.end())) {
    throw std::invalid_argument("curve radii must be sorted ascending");
  }
  std::vector<CurvePoint> curve;
  curve.reserve(radii.size());
  const double n = static_cast<double>(results.size());
  for (const double radius : radii) {
    int count = 0;
    for (const CertResult& r : results) {
      if (r.prediction != r.label) continue;
      if (require_converged && !r.converged) continue;
      if (r.radius >= radius) ++count;
    }
    curve.push_back({radius, count / n});
  }
  return curve;
}

Proposition1Outcome proposition1_check(const CertResult& result, const BernsteinSmoother& smoother,
                                       int samples, double shrink, std::uint64_t seed) {
  Proposition1Outcome out;
  if (!(result.radius > 0.0)) {
    out.skipped = true;
    return out;
  }
  const Eigen::Index d = result.anchor.size();
  const int base = smoother.predict(result.anchor);
  const double length = shrink * result.radius;
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Box unit = Box::unit(static_cast<int>(d));
  // Bound the rejection loop for anchors wedged in a corner of the box.
  const long max_draws = 1000L * std::max(samples, 1);
  long draws = 0;
  Eigen::VectorXd dir(d);
  while (out.evaluated < samples && draws < max_draws) {
    ++draws;
    for (Eigen::Index j = 0; j < d; ++j) dir[j] = normal(gen);
    const double dn = p_norm(dir, result.p);
    if (dn == 0.0) continue;
    const Eigen::VectorXd point = result.anchor + (length / dn) * dir;
    if (!unit.contains(point)) continue;
    ++out.evaluated;
    if (smoother.predict(point) != base) ++out.violations;
  }
  return out;
}

}  // namespace berncert
