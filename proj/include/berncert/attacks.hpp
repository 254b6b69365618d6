#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "berncert/norms.hpp"

namespace berncert {

class BernsteinSmoother;
class MlpModel;

/// Axis-aligned box [lower, upper].
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static Box unit(int d);
  bool contains(const Eigen::VectorXd& x) const;
  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const;
};

/// Score map with its Jacobian. Borrows whatever model or smoother it was
/// built from, so the source must outlive it.
struct DifferentiableClassifier {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> scores;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;  // K x dim
  std::optional<Box> domain;

  int predict(const Eigen::VectorXd& x) const;
};

DifferentiableClassifier base_input_classifier(const MlpModel& model);
DifferentiableClassifier base_feature_classifier(const MlpModel& model);
DifferentiableClassifier smoothed_feature_classifier(const BernsteinSmoother& smoother);
DifferentiableClassifier smoothed_input_classifier(const MlpModel& model,
                                                   const BernsteinSmoother& smoother);

enum class AttackSpace { input, feature };

std::string space_name(AttackSpace space);
AttackSpace parse_space(const std::string& name);

struct AttackConfig {
  NormOrder norm = NormOrder::l2();
  double epsilon = 0.0;
  int steps = 20;
  double step_size = 0.0;
  AttackSpace space = AttackSpace::feature;

  /// Step size 2.5 * epsilon / steps.
  static AttackConfig standard(NormOrder norm, double epsilon, int steps,
                               AttackSpace space = AttackSpace::feature);
  void validate() const;
};

struct AttackOutcome {
  Eigen::VectorXd point;
  bool zero_gradient = false;
};

/// Gradient of the softmax cross-entropy loss of `label` with respect to x.
Eigen::VectorXd loss_gradient(const DifferentiableClassifier& clf, const Eigen::VectorXd& x,
                              int label);

/// One signed (l_inf) or normalized (l_2) gradient step of size epsilon,
/// clamped to the classifier's domain.
AttackOutcome fgsm(const DifferentiableClassifier& clf, const Eigen::VectorXd& x, int label,
                   double epsilon, NormOrder norm);

/// Projected gradient ascent on the cross-entropy loss, starting at x and
/// projecting every iterate onto the epsilon ball around x and the domain.
AttackOutcome pgd(const DifferentiableClassifier& clf, const Eigen::VectorXd& x, int label,
                  const AttackConfig& cfg);

/// Smallest budget (from an ascending list) whose PGD attack changes the
/// prediction away from `label`. Returns 0 when x0 is already misclassified
/// and nullopt when every budget fails. `cfg` supplies norm and step count;
/// its epsilon and step size are replaced per budget.
std::optional<double> empirical_min_perturbation(const DifferentiableClassifier& clf,
                                                 const Eigen::VectorXd& x0, int label,
                                                 const std::vector<double>& budgets,
                                                 const AttackConfig& cfg);

}  // namespace berncert
