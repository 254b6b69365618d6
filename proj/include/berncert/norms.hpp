#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace berncert {

/// Order p of an l_p norm, p in (1, inf] for certification and {2, inf} for attacks.
class NormOrder {
 public:
  constexpr NormOrder() = default;
  explicit NormOrder(double p) : p_(p) {
    if (!(p >= 1.0)) throw std::invalid_argument("norm order must be >= 1");
  }

  static NormOrder l2() { return NormOrder(2.0); }
  static NormOrder inf() { return NormOrder(std::numeric_limits<double>::infinity()); }

  /// Accepts a number or one of "inf", "infinity", "linf".
  static NormOrder parse(const std::string& text) {
    if (text == "inf" || text == "infinity" || text == "linf" || text == "Inf") return inf();
    std::size_t used = 0;
    const double p = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("bad norm order '" + text + "'");
    return NormOrder(p);
  }

  double value() const { return p_; }
  bool is_inf() const { return std::isinf(p_); }
  bool is_l2() const { return p_ == 2.0; }

  std::string str() const {
    if (is_inf()) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", p_);
    return buf;
  }

  friend bool operator==(const NormOrder&, const NormOrder&) = default;

 private:
  double p_ = 2.0;
};

inline double p_norm(const Eigen::Ref<const Eigen::VectorXd>& v, NormOrder p) {
  if (v.size() == 0) return 0.0;
  if (p.is_inf()) return v.cwiseAbs().maxCoeff();
  if (p.value() == 2.0) return v.norm();
  if (p.value() == 1.0) return v.cwiseAbs().sum();
  const double scale = v.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::pow(std::abs(v[i]) / scale, p.value());
  return scale * std::pow(acc, 1.0 / p.value());
}

}  // namespace berncert
