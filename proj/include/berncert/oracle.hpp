#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "berncert/norms.hpp"

namespace berncert {

/// Class decision of a classifier on [0,1]^d.
using ArgmaxFn = std::function<int(const Eigen::VectorXd&)>;

struct OracleConfig {
  int grid_resolution = 512;
  int refine_bisections = 40;
  NormOrder norm = NormOrder::l2();

  /// 512 points per axis for d <= 2, 64 for d = 3.
  static OracleConfig defaults_for(int d);
  void validate() const;
};

/// Classes on the regular grid {0, 1/(r-1), ..., 1}^d, last axis fastest.
class ClassRaster {
 public:
  static ClassRaster build(const ArgmaxFn& classify, int d, int resolution);

  int dim() const { return d_; }
  int resolution() const { return resolution_; }
  std::size_t size() const { return classes_.size(); }
  int at(std::size_t index) const { return classes_[index]; }
  const std::vector<int>& classes() const { return classes_; }
  Eigen::VectorXd point(std::size_t index) const;
  /// p-norm length of one cell diagonal.
  double cell_diagonal(NormOrder p) const;

 private:
  int d_ = 0;
  int resolution_ = 0;
  std::vector<int> classes_;
};

struct OracleResult {
  bool found = false;  // false: the class is constant over the grid
  double distance = 0.0;
  Eigen::VectorXd witness;
};

/// Brute-force nearest decision-boundary distance from x0 (d <= 3): scans the
/// grid for points classified differently from x0 and bisects along the
/// segment from x0 to the nearest candidates.
OracleResult nearest_boundary_grid(const ArgmaxFn& classify, const Eigen::VectorXd& x0,
                                   const OracleConfig& cfg);

/// Same, reusing a raster built once for many anchors.
OracleResult nearest_boundary_grid(const ArgmaxFn& classify, const ClassRaster& raster,
                                   const Eigen::VectorXd& x0, const OracleConfig& cfg);

/// Distance along a p-normalized direction to the first class change within
/// max_t (and within the unit box), or nullopt when the far end still has x0's class.
std::optional<double> direction_bisect(const ArgmaxFn& classify, const Eigen::VectorXd& x0,
                                       const Eigen::VectorXd& direction, double max_t,
                                       int bisections);

}  // namespace berncert
