#include "berncert/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace berncert {

OracleConfig OracleConfig::defaults_for(int d) {
  OracleConfig cfg;
  cfg.grid_resolution = d <= 2 ? 512 : 64;
  return cfg;
}

void OracleConfig::validate() const {
  if (grid_resolution < 2) throw std::invalid_argument("oracle grid resolution must be >= 2");
  if (refine_bisections < 1) throw std::invalid_argument("oracle needs at least one bisection");
}

ClassRaster ClassRaster::build(const ArgmaxFn& classify, int d, int resolution) {
  if (d < 1 || d > 3) throw std::invalid_argument("grid oracle supports 1 <= d <= 3");
  if (resolution < 2) throw std::invalid_argument("raster resolution must be >= 2");
  ClassRaster r;
  r.d_ = d;
  r.resolution_ = resolution;
  std::size_t total = 1;
  for (int j = 0; j < d; ++j) total *= static_cast<std::size_t>(resolution);
  r.classes_.resize(total);
  for (std::size_t i = 0; i < total; ++i) r.classes_[i] = classify(r.point(i));
  return r;
}

Eigen::VectorXd ClassRaster::point(std::size_t index) const {
  Eigen::VectorXd p(d_);
  for (int j = d_ - 1; j >= 0; --j) {
    p[j] = static_cast<double>(index % resolution_) / (resolution_ - 1);
    index /= resolution_;
  }
  return p;
}

double ClassRaster::cell_diagonal(NormOrder p) const {
  const double side = 1.0 / (resolution_ - 1);
  return p_norm(Eigen::VectorXd::Constant(d_, side), p);
}

namespace {

// Bisects t in [0, 1] on x0 + t * span between x0's class and a different one.
double bisect_segment(const ArgmaxFn& classify, const Eigen::VectorXd& x0,
                      const Eigen::VectorXd& span, int base, int bisections) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < bisections; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (classify(x0 + mid * span) == base) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

}  // namespace

OracleResult nearest_boundary_grid(const ArgmaxFn& classify, const Eigen::VectorXd& x0,
                                   const OracleConfig& cfg) {
  cfg.validate();
  const ClassRaster raster =
      ClassRaster::build(classify, static_cast<int>(x0.size()), cfg.grid_resolution);
  return nearest_boundary_grid(classify, raster, x0, cfg);
}

OracleResult nearest_boundary_grid(const ArgmaxFn& classify, const ClassRaster& raster,
                                   const Eigen::VectorXd& x0, const OracleConfig& cfg) {
  cfg.validate();
  if (x0.size() != raster.dim()) throw std::invalid_argument("anchor dimension mismatch");
  const int base = classify(x0);

  std::vector<std::pair<double, std::size_t>> candidates;
  for (std::size_t i = 0; i < raster.size(); ++i) {
    if (raster.at(i) == base) continue;
    candidates.emplace_back(p_norm(raster.point(i) - x0, cfg.norm), i);
  }
  OracleResult out;
  if (candidates.empty()) return out;
  std::sort(candidates.begin(), candidates.end());

  const double diagonal = raster.cell_diagonal(cfg.norm);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [dist, index] : candidates) {
    if (dist > best + diagonal) break;
    const Eigen::VectorXd span = raster.point(index) - x0;
    const double t = bisect_segment(classify, x0, span, base, cfg.refine_bisections);
    const double crossing = t * dist;
    if (crossing < best) {
      best = crossing;
      out.witness = x0 + t * span;
    }
  }
  out.found = true;
  out.distance = best;
  return out;
}

std::optional<double> direction_bisect(const ArgmaxFn& classify, const Eigen::VectorXd& x0,
                                       const Eigen::VectorXd& direction, double max_t,
                                       int bisections) {
  if (bisections < 1) throw std::invalid_argument("direction_bisect needs bisections >= 1");
  // Stay inside the unit box.
  double t_end = max_t;
  for (Eigen::Index i = 0; i < direction.size(); ++i) {
    if (direction[i] > 0.0) t_end = std::min(t_end, (1.0 - x0[i]) / direction[i]);
    if (direction[i] < 0.0) t_end = std::min(t_end, -x0[i] / direction[i]);
  }
  if (!(t_end > 0.0)) return std::nullopt;
  const int base = classify(x0);
  if (classify(x0 + t_end * direction) == base) return std::nullopt;
  const double t = bisect_segment(classify, x0, t_end * direction, base, bisections);
  return t * t_end;
}

}  // namespace berncert
