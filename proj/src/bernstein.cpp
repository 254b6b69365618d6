#include "berncert/bernstein.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "berncert/errors.hpp"

namespace berncert {

namespace {

constexpr int kExactBinomialLimit = 30;

std::uint64_t binomial_exact(int n, int k) {
  if (k > n - k) k = n - k;
  std::uint64_t c = 1;
  for (int i = 1; i <= k; ++i) {
    // c * (n - k + i) / i stays integral at every step.
    c = c * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  }
  return c;
}

double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

void check_unit(double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::domain_error("Bernstein argument " + std::to_string(x) + " outside [0,1]");
  }
}

// Basis weight without argument checks.
double basis_unchecked(int n, int k, double x) {
  if (k < 0 || k > n) return 0.0;
  if (n <= kExactBinomialLimit) {
    return static_cast<double>(binomial_exact(n, k)) * std::pow(x, k) * std::pow(1.0 - x, n - k);
  }
  if (x == 0.0) return k == 0 ? 1.0 : 0.0;
  if (x == 1.0) return k == n ? 1.0 : 0.0;
  return std::exp(log_binomial(n, k) + k * std::log(x) + (n - k) * std::log1p(-x));
}

double derivative_unchecked(int n, int k, double x) {
  if (n == 0) return 0.0;
  return n * (basis_unchecked(n - 1, k - 1, x) - basis_unchecked(n - 1, k, x));
}

}  // namespace

double bernstein_basis(int n, int k, double x) {
  if (n < 0) throw std::domain_error("Bernstein degree must be non-negative");
  if (k < 0 || k > n) {
    throw std::domain_error("Bernstein index " + std::to_string(k) + " outside 0.." +
                            std::to_string(n));
  }
  check_unit(x);
  return basis_unchecked(n, k, x);
}

double bernstein_basis_derivative(int n, int k, double x) {
  if (n < 0) throw std::domain_error("Bernstein degree must be non-negative");
  if (k < 0 || k > n) {
    throw std::domain_error("Bernstein index " + std::to_string(k) + " outside 0.." +
                            std::to_string(n));
  }
  check_unit(x);
  return derivative_unchecked(n, k, x);
}

std::vector<double> bernstein_weights(int n, double x) {
  check_unit(x);
  std::vector<double> w(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) w[k] = basis_unchecked(n, k, x);
  return w;
}

double eval_1d(std::span<const double> samples, double x) {
  if (samples.empty()) throw std::domain_error("eval_1d needs at least one sample");
  check_unit(x);
  const int n = static_cast<int>(samples.size()) - 1;
  double acc = 0.0;
  for (int k = 0; k <= n; ++k) acc += samples[k] * basis_unchecked(n, k, x);
  return acc;
}

BernsteinSmoother::BernsteinSmoother(int n, int d, int k, std::vector<double> coeffs)
    : n_(n), d_(d), k_(k), rows_(1), coeffs_(std::move(coeffs)) {
  if (n < 1) throw std::invalid_argument("Bernstein degree must be >= 1");
  if (d < 1) throw std::invalid_argument("feature dimension must be >= 1");
  if (k < 1) throw std::invalid_argument("number of classes must be >= 1");
  for (int j = 0; j < d; ++j) rows_ *= static_cast<std::size_t>(n) + 1;
  if (coeffs_.size() != rows_ * static_cast<std::size_t>(k)) {
    throw ShapeError("coefficient tensor has " + std::to_string(coeffs_.size()) +
                     " entries, expected " + std::to_string(rows_ * k));
  }
}

BernsteinSmoother BernsteinSmoother::precompute(const Classifier& f, int n, int d,
                                                std::size_t cap) {
  if (n < 1) throw std::invalid_argument("Bernstein degree must be >= 1");
  if (d < 1) throw std::invalid_argument("feature dimension must be >= 1");

  std::size_t rows = 1;
  for (int j = 0; j < d; ++j) {
    rows *= static_cast<std::size_t>(n) + 1;
    if (rows > cap) {
      throw ResourceError("Bernstein grid (" + std::to_string(n) + "+1)^" + std::to_string(d) +
                          " exceeds cap of " + std::to_string(cap) + " entries");
    }
  }

  std::vector<double> coeffs;
  int k = -1;
  Eigen::VectorXd point(d);
  std::vector<int> digits(d, 0);
  for (std::size_t row = 0; row < rows; ++row) {
    for (int j = 0; j < d; ++j) point[j] = static_cast<double>(digits[j]) / n;
    const Eigen::VectorXd out = f(point);
    if (k < 0) {
      k = static_cast<int>(out.size());
      if (k < 1) throw ShapeError("classifier returned an empty output");
      if (rows * static_cast<std::size_t>(k) > cap) {
        throw ResourceError("Bernstein coefficient tensor of " + std::to_string(rows) + " x " +
                            std::to_string(k) + " exceeds cap of " + std::to_string(cap));
      }
      coeffs.reserve(rows * k);
    } else if (out.size() != k) {
      throw ShapeError("classifier output size changed across grid points");
    }
    coeffs.insert(coeffs.end(), out.data(), out.data() + k);

    // Advance the mixed-radix counter, last dimension fastest.
    for (int j = d - 1; j >= 0; --j) {
      if (++digits[j] <= n) break;
      digits[j] = 0;
    }
  }
  return BernsteinSmoother(n, d, k, std::move(coeffs));
}

Eigen::VectorXd BernsteinSmoother::grid_point(std::size_t row) const {
  Eigen::VectorXd p(d_);
  for (int j = d_ - 1; j >= 0; --j) {
    p[j] = static_cast<double>(row % (n_ + 1)) / n_;
    row /= (n_ + 1);
  }
  return p;
}

void BernsteinSmoother::check_point(const Eigen::VectorXd& x) const {
  if (x.size() != d_) {
    throw ShapeError("point has dimension " + std::to_string(x.size()) + ", smoother expects " +
                     std::to_string(d_));
  }
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (!(x[j] >= 0.0 && x[j] <= 1.0)) {
      throw std::domain_error("point coordinate " + std::to_string(j) + " = " +
                              std::to_string(x[j]) + " outside [0,1]");
    }
  }
}

Eigen::VectorXd BernsteinSmoother::contract(const std::vector<std::vector<double>>& weights) const {
  const std::size_t stride = static_cast<std::size_t>(n_) + 1;
  const std::size_t kk = static_cast<std::size_t>(k_);

  // Contract the last dimension first; each pass shrinks the row count by n+1.
  std::size_t rows = rows_ / stride;
  std::vector<double> cur(rows * kk, 0.0);
  {
    const std::vector<double>& w = weights[d_ - 1];
    for (std::size_t r = 0; r < rows; ++r) {
      double* dst = &cur[r * kk];
      const double* src = &coeffs_[r * stride * kk];
      for (std::size_t t = 0; t < stride; ++t) {
        const double wt = w[t];
        if (wt == 0.0) continue;
        for (std::size_t c = 0; c < kk; ++c) dst[c] += wt * src[t * kk + c];
      }
    }
  }
  for (int j = d_ - 2; j >= 0; --j) {
    const std::vector<double>& w = weights[j];
    const std::size_t next_rows = rows / stride;
    std::vector<double> next(next_rows * kk, 0.0);
    for (std::size_t r = 0; r < next_rows; ++r) {
      double* dst = &next[r * kk];
      const double* src = &cur[r * stride * kk];
      for (std::size_t t = 0; t < stride; ++t) {
        const double wt = w[t];
        if (wt == 0.0) continue;
        for (std::size_t c = 0; c < kk; ++c) dst[c] += wt * src[t * kk + c];
      }
    }
    cur.swap(next);
    rows = next_rows;
  }
  return Eigen::Map<const Eigen::VectorXd>(cur.data(), k_);
}

Eigen::VectorXd BernsteinSmoother::eval(const Eigen::VectorXd& x) const {
  check_point(x);
  std::vector<std::vector<double>> weights(d_);
  for (int j = 0; j < d_; ++j) weights[j] = bernstein_weights(n_, x[j]);
  return contract(weights);
}

Eigen::MatrixXd BernsteinSmoother::gradient(const Eigen::VectorXd& x) const {
  check_point(x);
  std::vector<std::vector<double>> weights(d_);
  std::vector<std::vector<double>> dweights(d_);
  for (int j = 0; j < d_; ++j) {
    weights[j] = bernstein_weights(n_, x[j]);
    dweights[j].resize(static_cast<std::size_t>(n_) + 1);
    for (int t = 0; t <= n_; ++t) dweights[j][t] = derivative_unchecked(n_, t, x[j]);
  }
  Eigen::MatrixXd jac(k_, d_);
  for (int j = 0; j < d_; ++j) {
    std::swap(weights[j], dweights[j]);
    jac.col(j) = contract(weights);
    std::swap(weights[j], dweights[j]);
  }
  return jac;
}

int BernsteinSmoother::predict(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd beta = eval(x);
  int best = 0;
  for (int i = 1; i < k_; ++i) {
    if (beta[i] > beta[best]) best = i;
  }
  return best;
}

}  // namespace berncert
