#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "berncert/attacks.hpp"
#include "berncert/norms.hpp"

namespace berncert {

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// Residual map Phi: R^n -> R^m with its m x n Jacobian.
struct LeastSquaresProblem {
  ResidualFn residual;
  JacobianFn jacobian;
};

enum class SolverMethod { newton, gauss_newton, lm, trust_region };
enum class Termination { f_tol, x_tol, max_iters, trust_radius_collapse };

std::string method_name(SolverMethod m);
SolverMethod parse_method(const std::string& name);
std::string termination_name(Termination t);

/// Relative pivot threshold below which a QR pivot counts as zero.
inline constexpr double kRankThreshold = 1e-12;
/// Trust radius below which the trust-region driver gives up.
inline constexpr double kTrustRadiusFloor = 1e-16;

struct SolverConfig {
  SolverMethod method = SolverMethod::lm;
  int max_iters = 200;
  /// Convergence on the residual: stop once ||Phi|| <= f_tol, or once an
  /// accepted step reduces ||Phi||^2 (actually and predicted) by at most a
  /// relative f_tol.
  double f_tol = 1.49e-8;
  /// Stop once a step satisfies ||h|| <= x_tol (||x|| + x_tol).
  double x_tol = 1.49e-8;
  double mu0_scale = 1e-3;
  double gn_step_alpha = 1.0;
  double tr_delta0 = 1.0;
  double tr_delta_max = 100.0;
  double tr_eta = 1e-4;
  /// 2 selects dogleg, inf selects dogbox.
  NormOrder subproblem_norm = NormOrder::l2();
  /// When set, one JSON object per iteration is written here.
  std::ostream* trace = nullptr;

  void validate() const;
};

struct IterationRecord {
  int k = 0;
  double objective = 0.0;  // 0.5 ||Phi||^2 before the step
  double step_norm = 0.0;
  double damping = 0.0;  // mu for LM, Delta for trust region, alpha otherwise
  double ratio = 0.0;
  double predicted_reduction = 0.0;
  bool accepted = false;
};

struct SolveReport {
  Eigen::VectorXd solution;
  double residual_norm_sq = 0.0;  // 0.5 ||Phi(solution)||^2
  int iterations = 0;
  Termination termination = Termination::max_iters;
  bool converged = false;
  bool rank_deficient = false;  // some linear solve hit a singular system
  std::vector<IterationRecord> history;
};

struct StepResult {
  Eigen::VectorXd step;
  int rank = 0;
  bool rank_deficient = false;
};

/// Solves J h = -phi; minimum-norm least-squares solution when J is rank deficient.
StepResult newton_step(const Eigen::MatrixXd& jac, const Eigen::VectorXd& phi);

/// Solves J^T J h = -J^T phi. Throws SingularSystemError when J lacks full column rank.
Eigen::VectorXd gauss_newton_step(const Eigen::MatrixXd& jac, const Eigen::VectorXd& phi);

/// Solves (J^T J + mu I) h = -J^T phi. mu == 0 reduces to gauss_newton_step.
Eigen::VectorXd lm_step(const Eigen::MatrixXd& jac, const Eigen::VectorXd& phi, double mu);

/// Levenberg-Marquardt with gain-ratio damping updates. Accepted iterates are
/// projected into `box` when one is given.
SolveReport solve_lm(const LeastSquaresProblem& problem, const Eigen::VectorXd& x0,
                     const SolverConfig& cfg, const std::optional<Box>& box = std::nullopt);

/// Trust-region method with a dogleg (l_2) or dogbox (l_inf) subproblem.
SolveReport trust_region_solve(const LeastSquaresProblem& problem, const Eigen::VectorXd& x0,
                               const SolverConfig& cfg,
                               const std::optional<Box>& box = std::nullopt);

/// Undamped full-step iterations x <- x + h (Newton) or x <- x + alpha h_gn.
SolveReport solve_newton(const LeastSquaresProblem& problem, const Eigen::VectorXd& x0,
                         const SolverConfig& cfg, const std::optional<Box>& box = std::nullopt);
SolveReport solve_gauss_newton(const LeastSquaresProblem& problem, const Eigen::VectorXd& x0,
                               const SolverConfig& cfg,
                               const std::optional<Box>& box = std::nullopt);

/// Dispatches on cfg.method.
SolveReport solve(const LeastSquaresProblem& problem, const Eigen::VectorXd& x0,
                  const SolverConfig& cfg, const std::optional<Box>& box = std::nullopt);

/// Dogleg step for the l_2 trust region of radius delta.
Eigen::VectorXd dogleg_step(const Eigen::MatrixXd& jac, const Eigen::VectorXd& phi, double delta);

/// Dogbox step: dogleg inside the box {|s_i| <= delta} intersected with the
/// bounds lower - x <= s <= upper - x, with variables frozen at active bounds.
Eigen::VectorXd dogbox_step(const Eigen::MatrixXd& jac, const Eigen::VectorXd& phi, double delta,
                            const Eigen::VectorXd& x, const std::optional<Box>& box);

/// Central finite differences of `fn` at x.
Eigen::MatrixXd finite_diff_jacobian(const ResidualFn& fn, const Eigen::VectorXd& x, double step);

}  // namespace berncert
