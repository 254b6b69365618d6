#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "berncert/attacks.hpp"
#include "berncert/certify.hpp"
#include "berncert/errors.hpp"
#include "berncert/oracle.hpp"

using namespace berncert;

namespace {

// beta = (x_1, 1 - x_1), boundary x_1 = 0.5.
BernsteinSmoother half_plane(int d = 2, int n = 1) {
  return BernsteinSmoother::precompute(
      [](const Eigen::VectorXd& x) { return Eigen::Vector2d(x[0], 1.0 - x[0]).eval(); }, n, d);
}

CertResult fake(int label, int prediction, double radius, bool converged = true) {
  CertResult r;
  r.label = label;
  r.prediction = prediction;
  r.radius = radius;
  r.converged = converged;
  return r;
}

}  // namespace

TEST(Certify, LinearFixtureFootPoint) {
  const auto s = half_plane();
  CertifyOptions opts;
  const CertResult r = certify_point(Eigen::Vector2d(0.8, 0.3), s, opts);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.prediction, 0);
  EXPECT_NEAR(r.radius, 0.3, 1e-6);
  EXPECT_NEAR(r.boundary_point[0], 0.5, 1e-6);
  EXPECT_NEAR(r.boundary_point[1], 0.3, 1e-12);
  EXPECT_EQ(r.radius, p_norm(r.anchor - r.boundary_point, r.p));

  opts.p = NormOrder::inf();
  EXPECT_NEAR(certify_point(Eigen::Vector2d(0.8, 0.3), s, opts).radius, 0.3, 1e-6);
  opts.solver.method = SolverMethod::trust_region;
  opts.solver.subproblem_norm = NormOrder::inf();
  EXPECT_NEAR(certify_point(Eigen::Vector2d(0.8, 0.3), s, opts).radius, 0.3, 1e-6);
}

TEST(Certify, AnchorOnBoundary) {
  const auto s = half_plane();
  const CertResult r = certify_point(Eigen::Vector2d(0.5, 0.7), s, CertifyOptions{});
  EXPECT_EQ(r.radius, 0.0);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_TRUE(r.converged);
}

TEST(Certify, ConservativeMarginShrinksRadius) {
  const auto s = half_plane();
  CertifyOptions opts;
  opts.c = 2.0;
  const CertResult c2 = certify_point(Eigen::Vector2d(0.8, 0.3), s, opts);
  opts.c = 10.0;
  const CertResult c10 = certify_point(Eigen::Vector2d(0.8, 0.3), s, opts);
  // gap 2 x_1 - 1 = 0.6 at the anchor, target gap 0.6 / C.
  EXPECT_NEAR(c2.xi, 0.3, 1e-15);
  EXPECT_NEAR(c2.radius, 0.15, 1e-6);
  EXPECT_NEAR(c10.radius, 0.27, 1e-6);
  EXPECT_GE(c10.radius, c2.radius);
}

TEST(Certify, Deterministic) {
  const MlpModel m = linear_boundary_model(2, 0.3);
  const BernsteinSmoother s = smooth_model(m, 2);
  const Eigen::Vector2d input = logit(Eigen::Vector2d(0.75, 0.4));
  const CertResult a = certify(input, m, s, CertifyOptions{});
  const CertResult b = certify(input, m, s, CertifyOptions{});
  EXPECT_EQ(a.radius, b.radius);
  EXPECT_EQ(a.boundary_point, b.boundary_point);
  EXPECT_NEAR(a.radius, 0.45, 1e-6);
}

TEST(Certify, ConstraintViolations) {
  const auto s = half_plane(3);
  EXPECT_THROW(certify_point(Eigen::Vector3d(0.8, 0.3, 0.3), s, CertifyOptions{}),
               ConstraintViolation);
  const auto one = BernsteinSmoother::precompute(
      [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, x[0]); }, 1, 1);
  EXPECT_THROW(certify_point(Eigen::VectorXd::Constant(1, 0.5), one, CertifyOptions{}),
               ConstraintViolation);
  CertifyOptions l1;
  l1.p = NormOrder(1.0);
  EXPECT_THROW(certify_point(Eigen::Vector2d(0.8, 0.3), half_plane(), l1), std::invalid_argument);
}

TEST(Certify, NonConvergenceIsFlagged) {
  const auto s = BernsteinSmoother::precompute(
      [](const Eigen::VectorXd&) { return Eigen::Vector2d(1.0, 0.0).eval(); }, 1, 2);
  const CertResult r = certify_point(Eigen::Vector2d(0.4, 0.4), s, CertifyOptions{});
  EXPECT_FALSE(r.converged);
  EXPECT_GT(r.residual_norm_sq, 0.0);
}

TEST(Certify2d, Values) {
  const auto s = half_plane();
  const BoundarySystem on(s, Eigen::Vector2d(0.5, 0.2));
  const CertResult zero = certify_2d(Eigen::Vector2d(0.5, 0.2), on, SolverConfig{});
  EXPECT_NEAR(zero.radius, 0.0, 1e-12);

  // 0.5 (2 x_1 - 1)^2 + (x_1 - 0.9)^2 is minimal at x_1 = 3.8 / 6.
  const Eigen::Vector2d x0(0.9, 0.5);
  const BoundarySystem sys(s, x0);
  const CertResult r = certify_2d(x0, sys, SolverConfig{});
  EXPECT_NEAR(r.boundary_point[0], 3.8 / 6.0, 1e-6);
  EXPECT_NEAR(r.radius, 0.9 - 3.8 / 6.0, 1e-6);
  EXPECT_LE(r.radius, 0.4);
  const CertResult weak = certify_2d(x0, sys, SolverConfig{}, 1e-8);
  EXPECT_NEAR(weak.radius, 0.4, 1e-5);
  EXPECT_THROW(certify_2d(Eigen::Vector3d(0.1, 0.2, 0.3),
                          BoundarySystem(half_plane(3), Eigen::Vector3d(0.8, 0.3, 0.3)),
                          SolverConfig{}),
               ConstraintViolation);
}

TEST(Curve, Counts) {
  const std::vector<CertResult> all{fake(0, 0, 1.0), fake(1, 1, 1.0)};
  const auto c = certified_curve(all, {0.0, 0.5, 2.0});
  EXPECT_EQ(c[0].accuracy, 1.0);
  EXPECT_EQ(c[1].accuracy, 1.0);
  EXPECT_EQ(c[2].accuracy, 0.0);
  const auto wrong = certified_curve({fake(0, 1, 1.0), fake(1, 0, 2.0)}, {0.0, 1.0});
  EXPECT_EQ(wrong[0].accuracy, 0.0);
  EXPECT_EQ(wrong[1].accuracy, 0.0);
  // Hand count: correct radii {0.2, 0.6, 0.9 (not converged)}, one wrong.
  const std::vector<CertResult> mixed{fake(0, 0, 0.2), fake(1, 1, 0.6), fake(0, 1, 0.8),
                                      fake(1, 1, 0.9, false)};
  const auto m = certified_curve(mixed, {0.0, 0.3, 0.7, 1.0});
  EXPECT_DOUBLE_EQ(m[0].accuracy, 0.75);
  EXPECT_DOUBLE_EQ(m[1].accuracy, 0.5);
  EXPECT_DOUBLE_EQ(m[2].accuracy, 0.25);
  EXPECT_DOUBLE_EQ(m[3].accuracy, 0.0);
  const auto strict = certified_curve(mixed, {0.0, 0.7}, true);
  EXPECT_DOUBLE_EQ(strict[0].accuracy, 0.5);
  EXPECT_DOUBLE_EQ(strict[1].accuracy, 0.0);
  for (std::size_t i = 1; i < m.size(); ++i) EXPECT_LE(m[i].accuracy, m[i - 1].accuracy);
  EXPECT_THROW(certified_curve({}, {0.0}), std::invalid_argument);
  EXPECT_THROW(certified_curve(mixed, {0.5, 0.1}), std::invalid_argument);
}

TEST(Proposition1, LinearFixture) {
  const auto s = half_plane();
  const CertResult r = certify_point(Eigen::Vector2d(0.8, 0.3), s, CertifyOptions{});
  const Proposition1Outcome ok = proposition1_check(r, s, 1000, 0.999, 1);
  EXPECT_EQ(ok.violations, 0);
  EXPECT_EQ(ok.evaluated, 1000);
  const Proposition1Outcome past = proposition1_check(r, s, 1000, 1.05, 1);
  EXPECT_GE(past.violations, 1);
  CertResult zero = r;
  zero.radius = 0.0;
  EXPECT_TRUE(proposition1_check(zero, s, 10, 0.999, 1).skipped);
}

TEST(Certify, FeatureRadiusBoundsInputPerturbation) {
  const MlpModel m = linear_boundary_model(2, 0.5);
  std::mt19937_64 gen(3);
  std::normal_distribution<double> g;
  for (int t = 0; t < 1000; ++t) {
    const Eigen::Vector2d a(g(gen), g(gen)), b(g(gen), g(gen));
    EXPECT_LE((m.features(a) - m.features(b)).norm(), (a - b).norm());
  }
}

TEST(PredictSmoothed, ConstantAndLargeDegree) {
  const MlpModel m = linear_boundary_model(2, 0.3);
  const BernsteinSmoother s = smooth_model(m, 40);
  for (double x1 : {0.1, 0.25, 0.35, 0.9}) {
    const Eigen::Vector2d input = logit(Eigen::Vector2d(x1, 0.5));
    EXPECT_EQ(predict_smoothed(input, m, s), m.predict(input));
  }
}

TEST(Attacks, FgsmAndPgdOnLinearGap) {
  const auto s = half_plane();
  const DifferentiableClassifier clf = smoothed_feature_classifier(s);
  const Eigen::Vector2d x(0.8, 0.3);
  EXPECT_EQ(fgsm(clf, x, 0, 0.0, NormOrder::inf()).point, x);
  const AttackOutcome f = fgsm(clf, x, 0, 0.1, NormOrder::inf());
  EXPECT_NEAR(f.point[0], 0.7, 1e-15);
  EXPECT_NEAR(f.point[1], 0.3, 1e-15);
  AttackConfig one;
  one.norm = NormOrder::inf();
  one.epsilon = 0.1;
  one.steps = 1;
  one.step_size = 0.1;
  EXPECT_LT((pgd(clf, x, 0, one).point - f.point).norm(), 1e-10);
  const AttackOutcome p = pgd(clf, x, 0, AttackConfig::standard(NormOrder::l2(), 0.2, 20));
  const Eigen::Vector2d delta = p.point - x;
  EXPECT_NEAR(delta[1], 0.0, 1e-12);
  EXPECT_LT(delta[0], 0.0);
  const AttackOutcome edge = fgsm(clf, Eigen::Vector2d(0.05, 0.5), 1, 0.3, NormOrder::l2());
  EXPECT_TRUE(Box::unit(2).contains(edge.point));
}

TEST(Attacks, PgdStaysInBallAndBox) {
  const MlpModel m = linear_boundary_model(2, 0.4);
  const DifferentiableClassifier clf = base_feature_classifier(m);
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const Eigen::Vector2d x(u(gen), u(gen));
    for (NormOrder p : {NormOrder::l2(), NormOrder::inf()}) {
      AttackConfig cfg = AttackConfig::standard(p, 0.15, 10);
      for (int steps = 1; steps <= 10; ++steps) {
        cfg.steps = steps;
        cfg.step_size = 0.15;
        const Eigen::VectorXd adv = pgd(clf, x, clf.predict(x), cfg).point;
        EXPECT_LE(p_norm(adv - x, p), 0.15 + 1e-12);
        EXPECT_TRUE(Box::unit(2).contains(adv));
      }
    }
  }
}

TEST(Attacks, ZeroGradientFlag) {
  const auto flat = BernsteinSmoother::precompute(
      [](const Eigen::VectorXd&) { return Eigen::Vector2d(1.0, 0.0).eval(); }, 1, 2);
  const DifferentiableClassifier clf = smoothed_feature_classifier(flat);
  const AttackOutcome out = fgsm(clf, Eigen::Vector2d(0.5, 0.5), 0, 0.1, NormOrder::l2());
  EXPECT_TRUE(out.zero_gradient);
  EXPECT_EQ(out.point, Eigen::Vector2d(0.5, 0.5));
}

TEST(Attacks, EmpiricalMinPerturbation) {
  const auto s = half_plane();
  const DifferentiableClassifier clf = smoothed_feature_classifier(s);
  const Eigen::Vector2d x(0.8, 0.3);
  const AttackConfig cfg = AttackConfig::standard(NormOrder::l2(), 0.1, 20);
  const auto found = empirical_min_perturbation(clf, x, 0, {0.1, 0.2, 0.3, 0.4}, cfg);
  ASSERT_TRUE(found.has_value());
  EXPECT_GE(*found, 0.3);
  EXPECT_FALSE(empirical_min_perturbation(clf, x, 0, {0.1, 0.2}, cfg).has_value());
  EXPECT_EQ(*empirical_min_perturbation(clf, x, 1, {0.1}, cfg), 0.0);
  std::vector<double> fine;
  for (int i = 1; i <= 60; ++i) fine.push_back(0.01 * i);
  const auto five = empirical_min_perturbation(clf, x, 0, fine, AttackConfig::standard(NormOrder::l2(), 0.1, 5));
  const auto twenty = empirical_min_perturbation(clf, x, 0, fine, cfg);
  ASSERT_TRUE(five && twenty);
  EXPECT_LE(*twenty, *five);
  EXPECT_THROW(empirical_min_perturbation(clf, x, 0, {0.2, 0.1}, cfg), std::invalid_argument);
}

TEST(Attacks, ConfigValidation) {
  AttackConfig cfg = AttackConfig::standard(NormOrder(3.0), 0.1, 10);
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = AttackConfig::standard(NormOrder::l2(), 0.1, 10);
  cfg.step_size = 0.001;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_EQ(parse_space(space_name(AttackSpace::input)), AttackSpace::input);
  EXPECT_THROW(parse_space("pixels"), std::invalid_argument);
}

TEST(Attacks, SmoothedInputClassifierUsesChainRule) {
  const MlpModel m = linear_boundary_model(2, 0.4);
  const BernsteinSmoother s = smooth_model(m, 3);
  const DifferentiableClassifier clf = smoothed_input_classifier(m, s);
  const Eigen::Vector2d input(0.3, -0.2);
  const Eigen::MatrixXd j = clf.jacobian(input);
  const double h = 1e-6;
  for (int c = 0; c < 2; ++c) {
    Eigen::Vector2d e = Eigen::Vector2d::Zero();
    e[c] = h;
    const Eigen::VectorXd fd = (clf.scores(input + e) - clf.scores(input - e)) / (2 * h);
    EXPECT_LT((j.col(c) - fd).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Oracle, LinearFixtureDistance) {
  const auto s = half_plane();
  const ArgmaxFn cls = [&](const Eigen::VectorXd& x) { return s.predict(x); };
  OracleConfig cfg;
  const OracleResult r = nearest_boundary_grid(cls, Eigen::Vector2d(0.8, 0.3), cfg);
  ASSERT_TRUE(r.found);
  const double diag = std::sqrt(2.0) / 511.0;
  EXPECT_NEAR(r.distance, 0.3, diag);
  cfg.grid_resolution = 256;
  const OracleResult coarse = nearest_boundary_grid(cls, Eigen::Vector2d(0.8, 0.3), cfg);
  EXPECT_LE(std::abs(coarse.distance - r.distance), std::sqrt(2.0) / 255.0);
  OracleConfig inf;
  inf.norm = NormOrder::inf();
  EXPECT_NEAR(nearest_boundary_grid(cls, Eigen::Vector2d(0.8, 0.3), inf).distance, 0.3, 1.0 / 511);
}

TEST(Oracle, ConstantClassifierHasNoBoundary) {
  const ArgmaxFn cls = [](const Eigen::VectorXd&) { return 1; };
  OracleConfig cfg;
  cfg.grid_resolution = 32;
  EXPECT_FALSE(nearest_boundary_grid(cls, Eigen::Vector2d(0.5, 0.5), cfg).found);
  EXPECT_THROW(nearest_boundary_grid(cls, Eigen::Vector4d(0.1, 0.1, 0.1, 0.1), cfg),
               std::invalid_argument);
}

TEST(Oracle, DirectionBisect) {
  const auto s = half_plane();
  const ArgmaxFn cls = [&](const Eigen::VectorXd& x) { return s.predict(x); };
  const auto t = direction_bisect(cls, Eigen::Vector2d(0.3, 0.5), Eigen::Vector2d(1, 0), 1.0, 40);
  ASSERT_TRUE(t.has_value());
  EXPECT_NEAR(*t, 0.2, std::ldexp(1.0, -40));
  EXPECT_FALSE(direction_bisect(cls, Eigen::Vector2d(0.3, 0.5), Eigen::Vector2d(0, 1), 1.0, 40));
  // On the boundary the class already differs from the left side.
  const auto on = direction_bisect(cls, Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(-1, 0), 1.0, 40);
  ASSERT_TRUE(on.has_value());
  EXPECT_NEAR(*on, 0.0, 1e-9);
}

TEST(Oracle, NotAboveSuccessfulAttacks) {
  const auto s = half_plane();
  const ArgmaxFn cls = [&](const Eigen::VectorXd& x) { return s.predict(x); };
  const DifferentiableClassifier clf = smoothed_feature_classifier(s);
  OracleConfig cfg;
  cfg.grid_resolution = 128;
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> budgets;
  for (int i = 1; i <= 100; ++i) budgets.push_back(0.01 * i);
  for (int t = 0; t < 10; ++t) {
    const Eigen::Vector2d x(u(gen), u(gen));
    const auto mp = empirical_min_perturbation(clf, x, s.predict(x), budgets,
                                               AttackConfig::standard(NormOrder::l2(), 0.1, 20));
    const OracleResult o = nearest_boundary_grid(cls, x, cfg);
    if (mp && o.found) EXPECT_LE(o.distance, *mp + 1e-12);
  }
}
