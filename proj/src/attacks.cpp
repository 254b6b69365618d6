#include "berncert/attacks.hpp"

#include <cmath>
#include <stdexcept>

#include "berncert/bernstein.hpp"
#include "berncert/boundary.hpp"
#include "berncert/model.hpp"

namespace berncert {

Box Box::unit(int d) {
  return Box{Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d)};
}

bool Box::contains(const Eigen::VectorXd& x) const {
  return x.size() == lower.size() && (x.array() >= lower.array()).all() &&
         (x.array() <= upper.array()).all();
}

Eigen::VectorXd Box::clamp(const Eigen::VectorXd& x) const {
  return x.cwiseMax(lower).cwiseMin(upper);
}

int DifferentiableClassifier::predict(const Eigen::VectorXd& x) const { return argmax(scores(x)); }

DifferentiableClassifier base_input_classifier(const MlpModel& model) {
  const MlpModel* m = &model;
  return {[m](const Eigen::VectorXd& x) { return m->forward(x); },
          [m](const Eigen::VectorXd& x) {
            Eigen::MatrixXd jac;
            m->run_range(x, 0, static_cast<int>(m->layers().size()), &jac);
            return jac;
          },
          std::nullopt};
}

DifferentiableClassifier base_feature_classifier(const MlpModel& model) {
  const MlpModel* m = &model;
  return {[m](const Eigen::VectorXd& x) { return m->logits(x); },
          [m](const Eigen::VectorXd& x) { return m->logits_jacobian(x); },
          Box::unit(m->feature_dim())};
}

DifferentiableClassifier smoothed_feature_classifier(const BernsteinSmoother& smoother) {
  const BernsteinSmoother* s = &smoother;
  return {[s](const Eigen::VectorXd& x) { return s->eval(x); },
          [s](const Eigen::VectorXd& x) { return s->gradient(x); }, Box::unit(s->dim())};
}

DifferentiableClassifier smoothed_input_classifier(const MlpModel& model,
                                                   const BernsteinSmoother& smoother) {
  const MlpModel* m = &model;
  const BernsteinSmoother* s = &smoother;
  return {[m, s](const Eigen::VectorXd& x) { return s->eval(m->features(x)); },
          [m, s](const Eigen::VectorXd& x) {
            Eigen::MatrixXd gjac;
            const Eigen::VectorXd feat = m->run_range(x, 0, m->head_index(), &gjac);
            return Eigen::MatrixXd(s->gradient(feat) * gjac);
          },
          std::nullopt};
}

std::string space_name(AttackSpace space) {
  return space == AttackSpace::input ? "input" : "feature";
}

AttackSpace parse_space(const std::string& name) {
  if (name == "input") return AttackSpace::input;
  if (name == "feature") return AttackSpace::feature;
  throw std::invalid_argument("unknown attack space '" + name + "'");
}

AttackConfig AttackConfig::standard(NormOrder norm, double epsilon, int steps, AttackSpace space) {
  AttackConfig cfg;
  cfg.norm = norm;
  cfg.epsilon = epsilon;
  cfg.steps = steps;
  cfg.step_size = steps > 0 ? 2.5 * epsilon / steps : 0.0;
  cfg.space = space;
  return cfg;
}

void AttackConfig::validate() const {
  if (!(norm.is_inf() || norm.is_l2())) throw std::invalid_argument("attack norm must be 2 or inf");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  if (steps < 1) throw std::invalid_argument("PGD needs at least one step");
  if (epsilon > 0.0 && !(step_size > 0.0)) throw std::invalid_argument("step size must be > 0");
  if (step_size * steps < epsilon * (1.0 - 1e-12)) {
    throw std::invalid_argument("step_size * steps must reach epsilon");
  }
}

Eigen::VectorXd loss_gradient(const DifferentiableClassifier& clf, const Eigen::VectorXd& x,
                              int label) {
  Eigen::VectorXd probs = softmax(clf.scores(x));
  probs[label] -= 1.0;
  return clf.jacobian(x).transpose() * probs;
}

namespace {

// Ascent direction under the attack norm; false when the gradient vanishes.
bool ascent_direction(const Eigen::VectorXd& grad, NormOrder norm, Eigen::VectorXd& dir) {
  if (norm.is_inf()) {
    dir = grad.unaryExpr([](double g) { return g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0); });
    return dir.cwiseAbs().maxCoeff() > 0.0;
  }
  const double gn = grad.norm();
  if (gn == 0.0 || !std::isfinite(gn)) return false;
  dir = grad / gn;
  return true;
}

Eigen::VectorXd project_ball(const Eigen::VectorXd& center, const Eigen::VectorXd& p,
                             double epsilon, NormOrder norm) {
  Eigen::VectorXd delta = p - center;
  if (norm.is_inf()) {
    delta = delta.cwiseMax(-epsilon).cwiseMin(epsilon);
  } else {
    const double dn = delta.norm();
    if (dn > epsilon) delta *= epsilon / dn;
  }
  return center + delta;
}

}  // namespace

AttackOutcome fgsm(const DifferentiableClassifier& clf, const Eigen::VectorXd& x, int label,
                   double epsilon, NormOrder norm) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  if (!(norm.is_inf() || norm.is_l2())) throw std::invalid_argument("attack norm must be 2 or inf");
  AttackOutcome out{x, false};
  if (epsilon == 0.0) return out;
  Eigen::VectorXd dir;
  if (!ascent_direction(loss_gradient(clf, x, label), norm, dir)) {
    out.zero_gradient = true;
    return out;
  }
  out.point = x + epsilon * dir;
  if (clf.domain) out.point = clf.domain->clamp(out.point);
  return out;
}

AttackOutcome pgd(const DifferentiableClassifier& clf, const Eigen::VectorXd& x, int label,
                  const AttackConfig& cfg) {
  cfg.validate();
  AttackOutcome out{x, false};
  if (cfg.epsilon == 0.0) return out;
  Eigen::VectorXd dir;
  for (int t = 0; t < cfg.steps; ++t) {
    if (!ascent_direction(loss_gradient(clf, out.point, label), cfg.norm, dir)) {
      out.zero_gradient = true;
      break;
    }
    Eigen::VectorXd next = project_ball(x, out.point + cfg.step_size * dir, cfg.epsilon, cfg.norm);
    // Clamping toward the box never moves a coordinate away from x, which is inside it.
    if (clf.domain) next = clf.domain->clamp(next);
    out.point = std::move(next);
  }
  return out;
}

std::optional<double> empirical_min_perturbation(const DifferentiableClassifier& clf,
                                                 const Eigen::VectorXd& x0, int label,
                                                 const std::vector<double>& budgets,
                                                 const AttackConfig& cfg) {
  for (std::size_t i = 1; i < budgets.size(); ++i) {
    if (budgets[i] < budgets[i - 1]) throw std::invalid_argument("budgets must be ascending");
  }
  if (clf.predict(x0) != label) return 0.0;
  for (const double eps : budgets) {
    if (eps <= 0.0) continue;
    const AttackConfig at = AttackConfig::standard(cfg.norm, eps, cfg.steps, cfg.space);
    const AttackOutcome adv = pgd(clf, x0, label, at);
    if (clf.predict(adv.point) != label) return eps;
  }
  return std::nullopt;
}

}  // namespace berncert
