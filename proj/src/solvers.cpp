#include "berncert/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <Eigen/QR>

#include "berncert/csv.hpp"
#include "berncert/errors.hpp"

namespace berncert {

std::string method_name(SolverMethod m) {
  switch (m) {
    case SolverMethod::newton:
      return "newton";
    case SolverMethod::gauss_newton:
      return "gauss_newton";
    case SolverMethod::lm:
      return "lm";
    case SolverMethod::trust_region:
      return "trust_region";
  }
  return "lm";
}

SolverMethod parse_method(const std::string& name) {
  if (name == "newton") return SolverMethod::newton;
  if (name == "gauss_newton" || name == "gn") return SolverMethod::gauss_newton;
  if (name == "lm") return SolverMethod::lm;
  if (name == "trust_region" || name == "tr") return SolverMethod::trust_region;
  throw std::invalid_argument("unknown solver '" + name + "'");
}

std::string termination_name(Termination t) {
  switch (t) {
    case Termination::f_tol:
      return "f_tol";
    case Termination::x_tol:
      return "x_tol";
    case Termination::max_iters:
      return "max_iters";
    case Termination::trust_radius_collapse:
      return "trust_radius_collapse";
  }
  return "max_iters";
}

void SolverConfig::validate() const {
  if (max_iters < 0) throw std::invalid_argument("max_iters must be >= 0");
  if (!(f_tol > 0.0) || !(x_tol > 0.0)) throw std::invalid_argument("tolerances must be > 0");
  if (!(mu0_scale > 0.0)) throw std::invalid_argument("mu0_scale must be > 0");
  if (!(gn_step_alpha > 0.0)) throw std::invalid_argument("gn_step_alpha must be > 0");
  if (!(tr_delta_max > 0.0)) throw std::invalid_argument("tr_delta_max must be > 0");
  if (!(tr_delta0 > 0.0 && tr_delta0 < tr_delta_max)) {
    throw std::invalid_argument("tr_delta0 must lie in (0, tr_delta_max)");
  }
  if (!(tr_eta >= 0.0 && tr_eta < 0.25)) throw std::invalid_argument("tr_eta must lie in [0, 1/4)");
  if (!(subproblem_norm.is_l2() || subproblem_norm.is_inf())) {
    throw std::invalid_argument("trust-region subproblem norm must be 2 or inf");
  }
}

StepResult newton_step(const Eigen::MatrixXd& jac, const Eigen::VectorXd& phi) {
  if (jac.rows() != phi.size()) throw ShapeError("Jacobian rows do not match residual size");
  StepResult out;
  if (jac.cols() == 0) {
    out.step = Eigen::VectorXd(0);
    return out;
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(kRankThreshold);
  cod.compute(jac);
  out.rank = static_cast<int>(cod.rank());
  out.rank_deficient = out.rank < std::min(jac.rows(), jac.cols());
  out.step = out.rank == 0 ? Eigen::VectorXd::Zero(jac.cols()) : Eigen::VectorXd(cod.solve(-phi));
  return out;
}

Eigen::VectorXd gauss_newton_step(const Eigen::MatrixXd& jac, const Eigen::VectorXd& phi) {
  if (jac.rows() != phi.size()) throw ShapeError("Jacobian rows do not match residual size");
  if (jac.rows() < jac.cols()) {
    throw std::invalid_argument("Gauss-Newton needs at least as many residuals as unknowns");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
  qr.setThreshold(kRankThreshold);
  qr.compute(jac);
  if (qr.rank() < jac.cols()) {
    throw SingularSystemError("Gauss-Newton normal matrix is singular (rank " +
                              std::to_string(qr.rank()) + " < " + std::to_string(jac.cols()) +
                              "); use Levenberg-Marquardt instead");
  }
  return qr.solve(-phi);
}

Eigen::VectorXd lm_step(const Eigen::MatrixXd& jac, const Eigen::VectorXd& phi, double mu) {
  if (!(mu >= 0.0)) throw std::invalid_argument("damping mu must be >= 0");
  if (mu == 0.0) return gauss_newton_step(jac, phi);
  if (jac.rows() != phi.size()) throw ShapeError("Jacobian rows do not match residual size");
  const Eigen::Index m = jac.rows();
  const Eigen::Index n = jac.cols();
  // [J; sqrt(mu) I] h = [-phi; 0] has the damped normal equations as its normal equations.
  Eigen::MatrixXd aug(m + n, n);
  aug.topRows(m) = jac;
  aug.bottomRows(n) = std::sqrt(mu) * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + n);
  rhs.head(m) = -phi;
  return Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(aug).solve(rhs);
}

namespace {

double predicted_reduction(const Eigen::MatrixXd& jac, const Eigen::VectorXd& grad,
                           const Eigen::VectorXd& step) {
  // L(0) - L(s) for L(s) = 0.5 ||Phi + J s||^2.
  return -grad.dot(step) - 0.5 * (jac * step).squaredNorm();
}

bool small_step(const Eigen::VectorXd& h, const Eigen::VectorXd& x, double x_tol) {
  return h.norm() <= x_tol * (x.norm() + x_tol);
}

// Residual norm test; ||Phi|| <= f_tol.
bool residual_small(double objective, double f_tol) {
  return std::sqrt(2.0 * objective) <= f_tol;
}

// Both reductions tiny relative to the current sum of squares.
bool reduction_stalled(double objective, double actual, double predicted, double f_tol) {
  return std::abs(actual) <= f_tol * objective && predicted <= f_tol * objective;
}

void emit_trace(const SolverConfig& cfg, const IterationRecord& rec, const char* damping_key) {
  if (!cfg.trace) return;
  *cfg.trace << "{\"k\":" << rec.k << ",\"F\":" << format_number(rec.objective)
             << ",\"step\":" << format_number(rec.step_norm) << ",\"" << damping_key
             << "\":" << format_number(rec.damping) << ",\"r\":" << format_number(rec.ratio)
             << ",\"accepted\":" << (rec.accepted ? "true" : "false") << "}\n";
}

SolveReport finish(SolveReport report, const Eigen::VectorXd& x, double objective,
                   Termination why) {
  report.solution = x;
  report.residual_norm_sq = objective;
  report.termination = why;
  report.converged = why == Termination::f_tol || why == Termination::x_tol;
  return report;
}

// Largest t in [0, t_cap] with lo <= base + t * dir <= hi componentwise.
double max_step_in_box(const Eigen::VectorXd& base, const Eigen::VectorXd& dir,
                       const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, double t_cap) {
  double t = t_cap;
  for (Eigen::Index i = 0; i < dir.size(); ++i) {
    if (dir[i] > 0.0) {
      t = std::min(t, (hi[i] - base[i]) / dir[i]);
    } else if (dir[i] < 0.0) {
      t = std::min(t, (lo[i] - base[i]) / dir[i]);
    }
  }
  return std::max(t, 0.0);
}

}  // namespace

SolveReport solve_lm(const LeastSquaresProblem& problem, const Eigen::VectorXd& x0,
                     const SolverConfig& cfg, const std::optional<Box>& box) {
  cfg.validate();
  SolveReport report;
  Eigen::VectorXd x = box ? box->clamp(x0) : x0;
  Eigen::VectorXd phi = problem.residual(x);
  double objective = 0.5 * phi.squaredNorm();
  if (residual_small(objective, cfg.f_tol)) return finish(report, x, objective, Termination::f_tol);

  Eigen::MatrixXd jac = problem.jacobian(x);
  Eigen::VectorXd grad = jac.transpose() * phi;
  double mu = cfg.mu0_scale * (jac.transpose() * jac).diagonal().maxCoeff();
  if (!(mu > 0.0)) mu = cfg.mu0_scale;

  for (int k = 0; k < cfg.max_iters; ++k) {
    if (grad.cwiseAbs().maxCoeff() == 0.0) return finish(report, x, objective, Termination::x_tol);
    const Eigen::VectorXd h = lm_step(jac, phi, mu);
    report.iterations = k + 1;
    IterationRecord rec{k, objective, h.norm(), mu, 0.0, 0.0, false};
    if (small_step(h, x, cfg.x_tol)) {
      report.history.push_back(rec);
      emit_trace(cfg, rec, "mu");
      return finish(report, x, objective, Termination::x_tol);
    }
    const Eigen::VectorXd x_new = box ? box->clamp(x + h) : Eigen::VectorXd(x + h);
    const Eigen::VectorXd step = x_new - x;
    const double predicted = predicted_reduction(jac, grad, step);
    rec.predicted_reduction = predicted;
    double ratio = -1.0;
    Eigen::VectorXd phi_new;
    double objective_new = objective;
    if (predicted > 0.0) {
      phi_new = problem.residual(x_new);
      objective_new = 0.5 * phi_new.squaredNorm();
      ratio = (objective - objective_new) / predicted;
    }
    rec.ratio = ratio;
    if (ratio > 0.0) {
      rec.accepted = true;
      report.history.push_back(rec);
      emit_trace(cfg, rec, "mu");
      const double actual = objective - objective_new;
      x = x_new;
      phi = std::move(phi_new);
      objective = objective_new;
      if (residual_small(objective, cfg.f_tol) ||
          reduction_stalled(objective + actual, actual, predicted, cfg.f_tol)) {
        return finish(report, x, objective, Termination::f_tol);
      }
      const double c = 2.0 * ratio - 1.0;
      mu *= std::max(1.0 / 3.0, 1.0 - c * c * c);
      jac = problem.jacobian(x);
      grad = jac.transpose() * phi;
    } else {
      report.history.push_back(rec);
      emit_trace(cfg, rec, "mu");
      mu *= 2.0;
    }
  }
  return finish(report, x, objective, Termination::max_iters);
}

Eigen::VectorXd dogleg_step(const Eigen::MatrixXd& jac, const Eigen::VectorXd& phi, double delta) {
  const Eigen::VectorXd h_gn = newton_step(jac, phi).step;
  if (h_gn.norm() <= delta) return h_gn;
  const Eigen::VectorXd grad = jac.transpose() * phi;
  const double gnorm = grad.norm();
  if (gnorm == 0.0) return Eigen::VectorXd::Zero(jac.cols());
  const double jg = (jac * grad).squaredNorm();
  if (jg == 0.0) return -(delta / gnorm) * grad;
  const Eigen::VectorXd h_sd = -(gnorm * gnorm / jg) * grad;
  const double sd_norm = h_sd.norm();
  if (sd_norm >= delta) return -(delta / gnorm) * grad;
  // Point on the segment h_sd -> h_gn at distance delta.
  const Eigen::VectorXd diff = h_gn - h_sd;
  const double a = diff.squaredNorm();
  const double b = 2.0 * h_sd.dot(diff);
  const double c = sd_norm * sd_norm - delta * delta;
  const double disc = std::sqrt(std::max(0.0, b * b - 4.0 * a * c));
  // Stable root of a t^2 + b t + c = 0 with t in [0, 1].
  const double t = b > 0.0 ? (-2.0 * c) / (b + disc) : (-b + disc) / (2.0 * a);
  return h_sd + std::clamp(t, 0.0, 1.0) * diff;
}

Eigen::VectorXd dogbox_step(const Eigen::MatrixXd& jac, const Eigen::VectorXd& phi, double delta,
                            const Eigen::VectorXd& x, const std::optional<Box>& box) {
  const Eigen::Index n = jac.cols();
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, -delta);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(n, delta);
  if (box) {
    lo = lo.cwiseMax(box->lower - x);
    hi = hi.cwiseMin(box->upper - x);
  }
  const Eigen::VectorXd grad = jac.transpose() * phi;

  // Freeze variables sitting on a bound that the descent direction points through.
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool at_lower = lo[i] >= 0.0 && grad[i] > 0.0;
    const bool at_upper = hi[i] <= 0.0 && grad[i] < 0.0;
    if (!at_lower && !at_upper) free.push_back(i);
  }
  Eigen::VectorXd step = Eigen::VectorXd::Zero(n);
  if (free.empty()) return step;

  const auto nf = static_cast<Eigen::Index>(free.size());
  Eigen::MatrixXd jf(jac.rows(), nf);
  Eigen::VectorXd gf(nf), lof(nf), hif(nf);
  for (Eigen::Index j = 0; j < nf; ++j) {
    jf.col(j) = jac.col(free[j]);
    gf[j] = grad[free[j]];
    lof[j] = lo[free[j]];
    hif[j] = hi[free[j]];
  }

  Eigen::VectorXd sf;
  const Eigen::VectorXd h_gn = newton_step(jf, phi).step;
  const bool gn_inside = (h_gn.array() >= lof.array()).all() && (h_gn.array() <= hif.array()).all();
  if (gn_inside) {
    sf = h_gn;
  } else if (gf.squaredNorm() == 0.0) {
    sf = Eigen::VectorXd::Zero(nf);
  } else {
    const double jg = (jf * gf).squaredNorm();
    const double alpha = jg > 0.0 ? gf.squaredNorm() / jg : std::numeric_limits<double>::infinity();
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(nf);
    const double t_box = max_step_in_box(zero, -gf, lof, hif, std::numeric_limits<double>::infinity());
    if (alpha >= t_box) {
      sf = -t_box * gf;
    } else {
      const Eigen::VectorXd cauchy = -alpha * gf;
      const double beta = max_step_in_box(cauchy, h_gn - cauchy, lof, hif, 1.0);
      sf = cauchy + beta * (h_gn - cauchy);
    }
  }
  for (Eigen::Index j = 0; j < nf; ++j) step[free[j]] = std::clamp(sf[j], lof[j], hif[j]);
  return step;
}

SolveReport trust_region_solve(const LeastSquaresProblem& problem, const Eigen::VectorXd& x0,
                               const SolverConfig& cfg, const std::optional<Box>& box) {
  cfg.validate();
  const bool use_dogbox = cfg.subproblem_norm.is_inf();
  SolveReport report;
  Eigen::VectorXd x = box ? box->clamp(x0) : x0;
  Eigen::VectorXd phi = problem.residual(x);
  double objective = 0.5 * phi.squaredNorm();
  if (residual_small(objective, cfg.f_tol)) return finish(report, x, objective, Termination::f_tol);

  Eigen::MatrixXd jac = problem.jacobian(x);
  Eigen::VectorXd grad = jac.transpose() * phi;
  double delta = cfg.tr_delta0;

  for (int k = 0; k < cfg.max_iters; ++k) {
    if (grad.cwiseAbs().maxCoeff() == 0.0) return finish(report, x, objective, Termination::x_tol);
    Eigen::VectorXd step;
    if (use_dogbox) {
      step = dogbox_step(jac, phi, delta, x, box);
    } else {
      step = dogleg_step(jac, phi, delta);
      if (box) step = box->clamp(x + step) - x;
    }
    report.iterations = k + 1;
    const double step_norm = p_norm(step, cfg.subproblem_norm);
    IterationRecord rec{k, objective, step_norm, delta, 0.0, 0.0, false};
    if (small_step(step, x, cfg.x_tol)) {
      report.history.push_back(rec);
      emit_trace(cfg, rec, "delta");
      return finish(report, x, objective, Termination::x_tol);
    }

    const Eigen::VectorXd x_new = x + step;
    const Eigen::VectorXd phi_new = problem.residual(x_new);
    const double objective_new = 0.5 * phi_new.squaredNorm();
    const double predicted = predicted_reduction(jac, grad, step);
    const double actual = objective - objective_new;
    const double ratio = predicted > 0.0 ? actual / predicted : -1.0;
    rec.ratio = ratio;
    rec.predicted_reduction = predicted;

    if (ratio < 0.25) {
      delta *= 0.25;
    } else if (ratio > 0.75 && std::abs(step_norm - delta) <= 1e-12 * delta) {
      delta = std::min(2.0 * delta, cfg.tr_delta_max);
    }

    if (ratio > cfg.tr_eta) {
      rec.accepted = true;
      x = x_new;
      phi = phi_new;
      objective = objective_new;
      report.history.push_back(rec);
      emit_trace(cfg, rec, "delta");
      if (residual_small(objective, cfg.f_tol) ||
          reduction_stalled(objective + actual, actual, predicted, cfg.f_tol)) {
        return finish(report, x, objective, Termination::f_tol);
      }
      jac = problem.jacobian(x);
      grad = jac.transpose() * phi;
    } else {
      report.history.push_back(rec);
      emit_trace(cfg, rec, "delta");
    }
    if (delta < kTrustRadiusFloor) {
      return finish(report, x, objective, Termination::trust_radius_collapse);
    }
  }
  return finish(report, x, objective, Termination::max_iters);
}

namespace {

template <typename StepFn>
SolveReport full_step_iterations(const LeastSquaresProblem& problem, const Eigen::VectorXd& x0,
                                 const SolverConfig& cfg, const std::optional<Box>& box,
                                 StepFn step_fn) {
  cfg.validate();
  SolveReport report;
  Eigen::VectorXd x = box ? box->clamp(x0) : x0;
  Eigen::VectorXd phi = problem.residual(x);
  double objective = 0.5 * phi.squaredNorm();
  if (residual_small(objective, cfg.f_tol)) return finish(report, x, objective, Termination::f_tol);
  for (int k = 0; k < cfg.max_iters; ++k) {
    const Eigen::MatrixXd jac = problem.jacobian(x);
    bool deficient = false;
    const Eigen::VectorXd h = step_fn(jac, phi, deficient);
    report.rank_deficient = report.rank_deficient || deficient;
    report.iterations = k + 1;
    IterationRecord rec{k, objective, h.norm(), cfg.gn_step_alpha, 1.0, 0.0, true};
    report.history.push_back(rec);
    emit_trace(cfg, rec, "alpha");
    if (small_step(h, x, cfg.x_tol)) return finish(report, x, objective, Termination::x_tol);
    x = box ? box->clamp(x + h) : Eigen::VectorXd(x + h);
    phi = problem.residual(x);
    objective = 0.5 * phi.squaredNorm();
    if (residual_small(objective, cfg.f_tol)) return finish(report, x, objective, Termination::f_tol);
  }
  return finish(report, x, objective, Termination::max_iters);
}

}  // namespace

SolveReport solve_newton(const LeastSquaresProblem& problem, const Eigen::VectorXd& x0,
                         const SolverConfig& cfg, const std::optional<Box>& box) {
  return full_step_iterations(problem, x0, cfg, box,
                              [](const Eigen::MatrixXd& jac, const Eigen::VectorXd& phi, bool& def) {
                                StepResult r = newton_step(jac, phi);
                                def = r.rank_deficient;
                                return r.step;
                              });
}

SolveReport solve_gauss_newton(const LeastSquaresProblem& problem, const Eigen::VectorXd& x0,
                               const SolverConfig& cfg, const std::optional<Box>& box) {
  const double alpha = cfg.gn_step_alpha;
  return full_step_iterations(
      problem, x0, cfg, box,
      [alpha](const Eigen::MatrixXd& jac, const Eigen::VectorXd& phi, bool&) {
        return Eigen::VectorXd(alpha * gauss_newton_step(jac, phi));
      });
}

SolveReport solve(const LeastSquaresProblem& problem, const Eigen::VectorXd& x0,
                  const SolverConfig& cfg, const std::optional<Box>& box) {
  switch (cfg.method) {
    case SolverMethod::newton:
      return solve_newton(problem, x0, cfg, box);
    case SolverMethod::gauss_newton:
      return solve_gauss_newton(problem, x0, cfg, box);
    case SolverMethod::lm:
      return solve_lm(problem, x0, cfg, box);
    case SolverMethod::trust_region:
      return trust_region_solve(problem, x0, cfg, box);
  }
  return solve_lm(problem, x0, cfg, box);
}

Eigen::MatrixXd finite_diff_jacobian(const ResidualFn& fn, const Eigen::VectorXd& x, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite difference step must be > 0");
  const Eigen::VectorXd f0 = fn(x);
  Eigen::MatrixXd jac(f0.size(), x.size());
  Eigen::VectorXd xp = x, xm = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    xp[j] = x[j] + step;
    xm[j] = x[j] - step;
    jac.col(j) = (fn(xp) - fn(xm)) / (2.0 * step);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return jac;
}

}  // namespace berncert
