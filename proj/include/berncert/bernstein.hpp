#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace berncert {

/// Bernstein basis weight C(n,k) x^k (1-x)^(n-k), with 0^0 = 1 at the endpoints.
/// Throws std::domain_error for x outside [0,1] or k outside 0..n.
double bernstein_basis(int n, int k, double x);

/// Derivative of the degree-n basis weight with respect to x.
double bernstein_basis_derivative(int n, int k, double x);

/// All n+1 basis weights at x.
std::vector<double> bernstein_weights(int n, double x);

/// One-dimensional Bernstein polynomial of the function sampled at k/n, k = 0..n.
double eval_1d(std::span<const double> samples, double x);

/// Default cap on (n+1)^d * K stored coefficients.
inline constexpr std::size_t kDefaultGridCap = 10'000'000;

/// Per-class d-dimensional Bernstein polynomial of a vector-valued classifier.
///
/// The classifier is sampled once on the uniform grid {0, 1/n, ..., 1}^d. Rows
/// are stored row-major with dimension 0 varying slowest, so grid point
/// (k_0, ..., k_{d-1}) lives at row sum_j k_j (n+1)^(d-1-j); each row holds
/// the K class outputs. Instances are immutable and safe to share across
/// threads.
class BernsteinSmoother {
 public:
  using Classifier = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  /// Samples `f` on the (n+1)^d grid. `f` must return the same K for every
  /// point. Throws ResourceError when (n+1)^d * K exceeds `cap`.
  static BernsteinSmoother precompute(const Classifier& f, int n, int d,
                                      std::size_t cap = kDefaultGridCap);

  /// Wraps an already computed coefficient tensor.
  BernsteinSmoother(int n, int d, int k, std::vector<double> coeffs);

  int degree() const { return n_; }
  int dim() const { return d_; }
  int num_classes() const { return k_; }
  std::size_t num_rows() const { return rows_; }
  const std::vector<double>& coeffs() const { return coeffs_; }

  /// Grid point of a row index.
  Eigen::VectorXd grid_point(std::size_t row) const;

  /// Smoothed class scores at x in [0,1]^d.
  Eigen::VectorXd eval(const Eigen::VectorXd& x) const;

  /// K x d Jacobian of eval at x.
  Eigen::MatrixXd gradient(const Eigen::VectorXd& x) const;

  /// Index of the largest smoothed score; ties go to the smallest index.
  int predict(const Eigen::VectorXd& x) const;

 private:
  void check_point(const Eigen::VectorXd& x) const;
  // Contracts the coefficient tensor against one weight vector per dimension.
  Eigen::VectorXd contract(const std::vector<std::vector<double>>& weights) const;

  int n_;
  int d_;
  int k_;
  std::size_t rows_;
  std::vector<double> coeffs_;
};

/// Convenience wrappers matching the module's free-function surface.
inline Eigen::VectorXd eval_multi(const BernsteinSmoother& s, const Eigen::VectorXd& x) {
  return s.eval(x);
}
inline Eigen::MatrixXd grad_multi(const BernsteinSmoother& s, const Eigen::VectorXd& x) {
  return s.gradient(x);
}

}  // namespace berncert
