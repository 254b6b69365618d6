#include "berncert/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "berncert/bernstein.hpp"
#include "berncert/errors.hpp"

namespace berncert {

Eigen::VectorXd softmax(const Eigen::VectorXd& beta) {
  if (beta.size() == 0) throw std::invalid_argument("softmax of an empty vector");
  if (beta.hasNaN()) throw std::domain_error("softmax input contains NaN");
  const double top = beta.maxCoeff();
  Eigen::VectorXd e = (beta.array() - top).exp();
  return e / e.sum();
}

std::vector<int> rank_map(const Eigen::VectorXd& beta) {
  std::vector<int> rho(static_cast<std::size_t>(beta.size()));
  std::iota(rho.begin(), rho.end(), 0);
  std::stable_sort(rho.begin(), rho.end(), [&](int a, int b) { return beta[a] > beta[b]; });
  return rho;
}

double conservative_xi(const Eigen::VectorXd& beta, const std::vector<int>& rho, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("conservative parameter C must be > 0");
  if (rho.size() < 2) throw std::invalid_argument("margin needs at least two classes");
  if (std::isinf(c)) return 0.0;
  const double gap = beta[rho[0]] - beta[rho[1]];
  if (gap < 0.0) throw std::invalid_argument("rank map does not order the top two classes");
  return gap / c;
}

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

BoundarySystem::BoundarySystem(const BernsteinSmoother& smoother, const Eigen::VectorXd& anchor,
                               double c)
    : smoother_(&smoother), c_(c) {
  const Eigen::VectorXd beta = smoother.eval(anchor);
  rho_ = rank_map(beta);
  if (rho_.size() < 2) throw ConstraintViolation("boundary system needs at least two classes");
  xi_ = conservative_xi(beta, rho_, c);
  init();
}

BoundarySystem::BoundarySystem(const BernsteinSmoother& smoother, std::vector<int> rho, double xi,
                               double c)
    : smoother_(&smoother), rho_(std::move(rho)), xi_(xi), c_(c) {
  std::vector<int> sorted = rho_;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] != static_cast<int>(i)) throw std::invalid_argument("rank map is not a permutation");
  }
  if (static_cast<int>(rho_.size()) != smoother.num_classes()) {
    throw std::invalid_argument("rank map size does not match the number of classes");
  }
  if (rho_.size() < 2) throw ConstraintViolation("boundary system needs at least two classes");
  if (!(xi_ >= 0.0)) throw std::invalid_argument("margin xi must be >= 0");
  if (!(c_ > 0.0)) throw std::invalid_argument("conservative parameter C must be > 0");
  init();
}

void BoundarySystem::init() {
  dim_ = smoother_->dim();
  const int k = smoother_->num_classes();
  num_residuals_ = std::min(dim_, k - 1) + 2;
  num_residuals_ = std::min(num_residuals_, dim_ + 1);
}

Eigen::VectorXd BoundarySystem::residual(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd beta = smoother_->eval(x);
  const Eigen::VectorXd s = softmax(beta);
  Eigen::VectorXd phi(num_residuals_);
  phi[0] = beta[rho_[0]] - beta[rho_[1]] - xi_;
  if (num_residuals_ > 1) phi[1] = s[rho_[0]] - logistic(xi_);
  if (num_residuals_ > 2) phi[2] = s[rho_[1]] - logistic(-xi_);
  for (int r = 3; r < num_residuals_; ++r) phi[r] = s[rho_[r - 1]];
  return phi;
}

Eigen::MatrixXd BoundarySystem::jacobian(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd beta = smoother_->eval(x);
  const Eigen::MatrixXd grad = smoother_->gradient(x);  // K x d
  const Eigen::VectorXd s = softmax(beta);
  // dS_i/dx = S_i * (grad_i - sum_j S_j grad_j)
  const Eigen::RowVectorXd mean_grad = s.transpose() * grad;
  auto softmax_row = [&](int cls) -> Eigen::RowVectorXd {
    return s[cls] * (grad.row(cls) - mean_grad);
  };
  Eigen::MatrixXd jac(num_residuals_, dim_);
  jac.row(0) = grad.row(rho_[0]) - grad.row(rho_[1]);
  if (num_residuals_ > 1) jac.row(1) = softmax_row(rho_[0]);
  if (num_residuals_ > 2) jac.row(2) = softmax_row(rho_[1]);
  for (int r = 3; r < num_residuals_; ++r) jac.row(r) = softmax_row(rho_[r - 1]);
  return jac;
}

double BoundarySystem::objective(const Eigen::VectorXd& x) const {
  return objective_from_residual(residual(x));
}

}  // namespace berncert
