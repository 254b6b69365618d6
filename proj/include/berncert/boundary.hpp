#pragma once

#include <limits>
#include <vector>

#include <Eigen/Core>

namespace berncert {

class BernsteinSmoother;

inline constexpr double kInfiniteC = std::numeric_limits<double>::infinity();

/// Softmax with max-subtraction. Throws std::domain_error on NaN input.
Eigen::VectorXd softmax(const Eigen::VectorXd& beta);

/// Classes ordered by descending score, ties by ascending class index.
/// Entry r is the class holding rank r+1.
std::vector<int> rank_map(const Eigen::VectorXd& beta);

/// Margin (beta[top] - beta[runner-up]) / C; zero for C = infinity.
/// Throws std::invalid_argument for C <= 0.
double conservative_xi(const Eigen::VectorXd& beta, const std::vector<int>& rho, double c);

/// Logistic function 1 / (1 + exp(-z)).
double logistic(double z);

/// Residual system whose roots lie on the smoothed decision boundary between
/// the top two classes at an anchor point, shifted toward the anchor by the
/// margin xi:
///
///   phi_0 = beta_top - beta_second - xi
///   phi_1 = S(beta)_top - logistic(xi)
///   phi_2 = S(beta)_second - logistic(-xi)
///   phi_r = S(beta)_{rank r+1},  r = 3 .. m-1
///
/// with m = min(d, K-1) + 2 capped at d+1 residuals. The rank map and xi are
/// frozen at construction. Borrows the smoother, which must outlive it.
class BoundarySystem {
 public:
  /// Ranks and margin taken from the smoother at `anchor`.
  BoundarySystem(const BernsteinSmoother& smoother, const Eigen::VectorXd& anchor,
                 double c = kInfiniteC);
  /// Explicit rank map and margin.
  BoundarySystem(const BernsteinSmoother& smoother, std::vector<int> rho, double xi,
                 double c = kInfiniteC);

  int dim() const { return dim_; }
  int num_residuals() const { return num_residuals_; }
  const std::vector<int>& rho() const { return rho_; }
  double xi() const { return xi_; }
  double c_param() const { return c_; }
  const BernsteinSmoother& smoother() const { return *smoother_; }

  Eigen::VectorXd residual(const Eigen::VectorXd& x) const;
  /// num_residuals x d analytic Jacobian.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;
  /// 0.5 * ||residual(x)||^2.
  double objective(const Eigen::VectorXd& x) const;

 private:
  void init();

  const BernsteinSmoother* smoother_;
  std::vector<int> rho_;
  double xi_ = 0.0;
  double c_ = kInfiniteC;
  int dim_ = 0;
  int num_residuals_ = 0;
};

/// 0.5 * sum of squared residuals.
inline double objective_from_residual(const Eigen::VectorXd& phi) { return 0.5 * phi.squaredNorm(); }

}  // namespace berncert
