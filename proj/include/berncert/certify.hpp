#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "berncert/bernstein.hpp"
#include "berncert/boundary.hpp"
#include "berncert/model.hpp"
#include "berncert/norms.hpp"
#include "berncert/solvers.hpp"

namespace berncert {

struct CertifyOptions {
  NormOrder p = NormOrder::l2();
  double c = kInfiniteC;
  SolverConfig solver;
};

/// Certified radius of one example, measured in feature space.
struct CertResult {
  int index = -1;
  int label = -1;
  int prediction = -1;
  double radius = 0.0;
  NormOrder p;
  Eigen::VectorXd anchor;          // x_0 = G(input)
  Eigen::VectorXd boundary_point;  // solver solution projected onto [0,1]^d
  double residual_norm_sq = 0.0;   // 0.5 ||Phi(boundary_point)||^2
  bool converged = false;          // solver hit a tolerance and residual_norm_sq <= f_tol
  double xi = 0.0;
  double c_param = kInfiniteC;
  int iterations = 0;
  Termination termination = Termination::max_iters;
};

/// Samples the model's classifier head on the (n+1)^d feature grid.
BernsteinSmoother smooth_model(const MlpModel& model, int n, std::size_t cap = kDefaultGridCap);

/// Runs the boundary solve from the feature point x0 and reports
/// R = ||x0 - sol||_p. Throws ConstraintViolation when d > K or K < 2.
CertResult certify_point(const Eigen::VectorXd& x0, const BernsteinSmoother& smoother,
                         const CertifyOptions& opts);

/// x0 = G(input), then certify_point.
CertResult certify(const Eigen::VectorXd& input, const MlpModel& model,
                   const BernsteinSmoother& smoother, const CertifyOptions& opts);

/// argmax of the smoothed classifier at G(input).
int predict_smoothed(const Eigen::VectorXd& input, const MlpModel& model,
                     const BernsteinSmoother& smoother);

/// Two-dimensional variant: minimizes 0.5 phi_0(x)^2 + weight ||x0 - x||^2
/// with the trust-region solver and reports the l_2 distance to the minimizer.
CertResult certify_2d(const Eigen::VectorXd& x0, const BoundarySystem& system,
                      const SolverConfig& cfg, double weight = 1.0);

struct CurvePoint {
  double radius = 0.0;
  double accuracy = 0.0;
};

/// Fraction of results that are correct and certified at each radius.
/// With `require_converged`, non-converged results never count as certified.
std::vector<CurvePoint> certified_curve(const std::vector<CertResult>& results,
                                        const std::vector<double>& radii,
                                        bool require_converged = false);

struct Proposition1Outcome {
  int violations = 0;
  int evaluated = 0;
  bool skipped = false;
};

/// Draws perturbations of p-norm shrink * R around the anchor (rejecting
/// those leaving [0,1]^d) and counts smoothed-argmax flips.
Proposition1Outcome proposition1_check(const CertResult& result, const BernsteinSmoother& smoother,
                                       int samples, double shrink, std::uint64_t seed);

}  // namespace berncert
