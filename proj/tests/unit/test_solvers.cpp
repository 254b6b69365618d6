#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/QR>
#include <gtest/gtest.h>

#include "berncert/errors.hpp"
#include "berncert/solvers.hpp"

using namespace berncert;

namespace {

LeastSquaresProblem rosenbrock() {
  return {[](const Eigen::VectorXd& x) {
            return Eigen::Vector2d(10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]).eval();
          },
          [](const Eigen::VectorXd& x) {
            Eigen::MatrixXd j(2, 2);
            j << -20.0 * x[0], 10.0, -1.0, 0.0;
            return j;
          }};
}

LeastSquaresProblem linear(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  return {[a, b](const Eigen::VectorXd& x) { return (a * x - b).eval(); },
          [a](const Eigen::VectorXd&) { return a; }};
}

Eigen::MatrixXd random_matrix(int m, int n, std::mt19937_64& gen) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(m, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(gen);
  return a;
}

Eigen::VectorXd random_vector(int n, std::mt19937_64& gen) {
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = g(gen);
  return v;
}

// Random smooth nonlinear residuals with a root-free least-squares landscape.
LeastSquaresProblem random_nonlinear(std::mt19937_64& gen) {
  const Eigen::MatrixXd a = random_matrix(4, 3, gen);
  const Eigen::VectorXd b = random_vector(4, gen);
  return {[a, b](const Eigen::VectorXd& x) {
            return ((a * x).array().sin() + 0.3 * x.squaredNorm() - b.array()).matrix().eval();
          },
          [a](const Eigen::VectorXd& x) {
            Eigen::MatrixXd j = (a * x).array().cos().matrix().asDiagonal() * a;
            j.rowwise() += 0.6 * x.transpose();
            return j;
          }};
}

}  // namespace

TEST(NewtonStep, LinearAndScalar) {
  const Eigen::Vector2d a(0.3, -0.4), x(1.0, 2.0);
  const StepResult s = newton_step(Eigen::MatrixXd::Identity(2, 2), x - a);
  EXPECT_LT((s.step - (a - x)).norm(), 1e-15);
  EXPECT_FALSE(s.rank_deficient);
  const StepResult q = newton_step(Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::VectorXd::Ones(1));
  EXPECT_DOUBLE_EQ(q.step[0], -0.5);
  const StepResult z = newton_step(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d::Zero());
  EXPECT_EQ(z.step.norm(), 0.0);
  const StepResult sing = newton_step(Eigen::MatrixXd::Zero(2, 2), Eigen::Vector2d(1, 1));
  EXPECT_TRUE(sing.rank_deficient);
  EXPECT_TRUE(sing.step.allFinite());
}

TEST(GaussNewtonStep, ReachesLeastSquaresOptimum) {
  std::mt19937_64 gen(1);
  const Eigen::MatrixXd a = random_matrix(6, 3, gen);
  const Eigen::VectorXd b = random_vector(6, gen);
  const Eigen::VectorXd x0 = random_vector(3, gen);
  const Eigen::VectorXd h = gauss_newton_step(a, a * x0 - b);
  const Eigen::VectorXd opt = a.colPivHouseholderQr().solve(b);
  EXPECT_LT((x0 + h - opt).norm(), 1e-10);
}

TEST(GaussNewtonStep, DescentDirection) {
  std::mt19937_64 gen(2);
  for (int t = 0; t < 100; ++t) {
    const Eigen::MatrixXd j = random_matrix(5, 3, gen);
    const Eigen::VectorXd phi = random_vector(5, gen);
    const Eigen::VectorXd h = gauss_newton_step(j, phi);
    EXPECT_LT(h.dot(j.transpose() * phi), 0.0);
  }
}

TEST(GaussNewtonStep, RankDeficientThrows) {
  Eigen::MatrixXd j(3, 2);
  j << 1, 2, 2, 4, 3, 6;
  EXPECT_THROW(gauss_newton_step(j, Eigen::Vector3d(1, 1, 1)), SingularSystemError);
}

TEST(LmStep, LimitsAndSingularity) {
  std::mt19937_64 gen(3);
  const Eigen::MatrixXd j = random_matrix(5, 3, gen);
  const Eigen::VectorXd phi = random_vector(5, gen);
  const Eigen::VectorXd gn = gauss_newton_step(j, phi);
  EXPECT_LT((lm_step(j, phi, 0.0) - gn).norm(), 1e-10);
  double previous = std::numeric_limits<double>::infinity();
  for (double mu : {1.0, 1e-2, 1e-4, 1e-6}) {
    const double gap = (lm_step(j, phi, mu) - gn).norm();
    EXPECT_LT(gap, previous);
    previous = gap;
  }
  const Eigen::VectorXd big = lm_step(j, phi, 1e6);
  const Eigen::VectorXd grad = -(j.transpose() * phi);
  const double cosine = big.dot(grad) / (big.norm() * grad.norm());
  EXPECT_LT(std::acos(std::min(1.0, cosine)), 1e-3);
  const Eigen::VectorXd sing = lm_step(Eigen::MatrixXd::Zero(3, 2), Eigen::Vector3d(1, 2, 3), 1e-3);
  EXPECT_TRUE(sing.allFinite());
  Eigen::MatrixXd rank1(3, 2);
  rank1 << 1, 2, 2, 4, 3, 6;
  EXPECT_TRUE(lm_step(rank1, Eigen::Vector3d(1, 0, 1), 1e-3).allFinite());
}

TEST(SolveLm, Rosenbrock) {
  SolverConfig cfg;
  const SolveReport r = solve_lm(rosenbrock(), Eigen::Vector2d(-1.2, 1.0), cfg);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.iterations, 200);
  EXPECT_LT((r.solution - Eigen::Vector2d(1, 1)).norm(), 1e-6);
  EXPECT_LT(2.0 * r.residual_norm_sq, 1.49e-8);
}

TEST(SolveLm, LinearSystemConvergesQuickly) {
  std::mt19937_64 gen(4);
  const Eigen::MatrixXd a = random_matrix(3, 3, gen);
  const Eigen::VectorXd b = random_vector(3, gen);
  const SolveReport r = solve_lm(linear(a, b), Eigen::Vector3d::Zero(), SolverConfig{});
  EXPECT_TRUE(r.converged);
  EXPECT_LT((a * r.solution - b).norm(), 1e-8);
  // The damped first step needs a few rounds for mu to decay; see the notes.
  EXPECT_LE(r.iterations, 6);
}

TEST(SolveLm, AlreadyConverged) {
  const SolveReport r = solve_lm(rosenbrock(), Eigen::Vector2d(1.0, 1.0), SolverConfig{});
  EXPECT_EQ(r.iterations, 0);
  EXPECT_TRUE(r.converged);
}

TEST(SolveLm, AcceptedStepsDecreaseObjective) {
  std::mt19937_64 gen(5);
  for (int t = 0; t < 20; ++t) {
    const auto p = random_nonlinear(gen);
    const SolveReport r = solve_lm(p, random_vector(3, gen), SolverConfig{});
    double last = std::numeric_limits<double>::infinity();
    for (const auto& rec : r.history) {
      EXPECT_LE(rec.objective, last);
      if (rec.accepted) last = rec.objective;
    }
  }
}

TEST(SolveLm, MaxItersReportedNotRaised) {
  SolverConfig cfg;
  cfg.max_iters = 2;
  const SolveReport r = solve_lm(rosenbrock(), Eigen::Vector2d(-1.2, 1.0), cfg);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.termination, Termination::max_iters);
}

TEST(SolveLm, BoxKeepsIterates) {
  const Box box{Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(0.5, 0.5)};
  const SolveReport r = solve_lm(rosenbrock(), Eigen::Vector2d(0.1, 0.1), SolverConfig{}, box);
  EXPECT_TRUE(box.contains(r.solution));
}

TEST(SolveLm, Deterministic) {
  std::ostringstream a, b;
  SolverConfig cfg;
  cfg.trace = &a;
  const SolveReport r1 = solve_lm(rosenbrock(), Eigen::Vector2d(-1.2, 1.0), cfg);
  cfg.trace = &b;
  const SolveReport r2 = solve_lm(rosenbrock(), Eigen::Vector2d(-1.2, 1.0), cfg);
  EXPECT_EQ(r1.solution, r2.solution);
  EXPECT_EQ(r1.iterations, r2.iterations);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_FALSE(a.str().empty());
  EXPECT_NE(a.str().find("\"mu\""), std::string::npos);
}

TEST(TrustRegion, Rosenbrock) {
  SolverConfig cfg;
  cfg.method = SolverMethod::trust_region;
  for (NormOrder sub : {NormOrder::l2(), NormOrder::inf()}) {
    cfg.subproblem_norm = sub;
    const SolveReport r = trust_region_solve(rosenbrock(), Eigen::Vector2d(-1.2, 1.0), cfg);
    EXPECT_TRUE(r.converged) << sub.str();
    EXPECT_LE(r.iterations, 200);
    EXPECT_LT((r.solution - Eigen::Vector2d(1, 1)).norm(), 1e-6) << sub.str();
    EXPECT_LT(2.0 * r.residual_norm_sq, 1.49e-8);
  }
}

TEST(TrustRegion, ExactModelGivesUnitRatio) {
  std::mt19937_64 gen(6);
  const Eigen::MatrixXd a = random_matrix(4, 2, gen);
  const Eigen::VectorXd b = random_vector(4, gen);
  SolverConfig cfg;
  cfg.tr_delta0 = 0.05;
  const SolveReport r = trust_region_solve(linear(a, b), Eigen::Vector2d(3.0, -2.0), cfg);
  int accepted = 0;
  for (const auto& rec : r.history) {
    if (!rec.accepted) continue;
    ++accepted;
    EXPECT_NEAR(rec.ratio, 1.0, 1e-6);
  }
  EXPECT_GT(accepted, 0);
}

TEST(TrustRegion, PredictedReductionNonNegative) {
  std::mt19937_64 gen(7);
  SolverConfig cfg;
  for (int t = 0; t < 100; ++t) {
    cfg.subproblem_norm = t % 2 ? NormOrder::inf() : NormOrder::l2();
    const auto p = random_nonlinear(gen);
    const SolveReport r = trust_region_solve(p, random_vector(3, gen), cfg);
    for (const auto& rec : r.history) EXPECT_GE(rec.predicted_reduction, 0.0);
  }
}

TEST(TrustRegion, RadiusCollapse) {
  // A Jacobian that lies: the model predicts decrease that never happens.
  const LeastSquaresProblem liar{
      [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, 1.0 + x.squaredNorm()); },
      [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Constant(1, 1, 1.0); }};
  SolverConfig cfg;
  cfg.max_iters = 1000;
  const SolveReport r = trust_region_solve(liar, Eigen::VectorXd::Zero(1), cfg);
  EXPECT_EQ(r.termination, Termination::trust_radius_collapse);
  EXPECT_FALSE(r.converged);
}

TEST(Subproblems, StepsRespectRadius) {
  std::mt19937_64 gen(8);
  for (int t = 0; t < 200; ++t) {
    const Eigen::MatrixXd j = random_matrix(4, 3, gen);
    const Eigen::VectorXd phi = random_vector(4, gen);
    const double delta = std::exp(std::uniform_real_distribution<double>(-5, 2)(gen));
    EXPECT_LE(dogleg_step(j, phi, delta).norm(), delta * (1 + 1e-12));
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(3, 0.5);
    const Box box{Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3)};
    const Eigen::VectorXd s = dogbox_step(j, phi, delta, x, box);
    EXPECT_LE(s.cwiseAbs().maxCoeff(), delta + 1e-12);
    EXPECT_TRUE(box.contains(x + s));
  }
}

TEST(FiniteDiff, Values) {
  std::mt19937_64 gen(9);
  const Eigen::MatrixXd a = random_matrix(3, 2, gen);
  const Eigen::MatrixXd j = finite_diff_jacobian(
      [&](const Eigen::VectorXd& x) { return (a * x).eval(); }, Eigen::Vector2d(0.2, -0.5), 1e-6);
  EXPECT_LT((j - a).cwiseAbs().maxCoeff(), 1e-8);
  const Eigen::MatrixXd q = finite_diff_jacobian(
      [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, x[0] * x[0]); },
      Eigen::VectorXd::Ones(1), 1e-6);
  EXPECT_NEAR(q(0, 0), 2.0, 1e-8);
}

TEST(Solve, DispatchAndNames) {
  for (auto m : {SolverMethod::newton, SolverMethod::gauss_newton, SolverMethod::lm,
                 SolverMethod::trust_region}) {
    EXPECT_EQ(parse_method(method_name(m)), m);
    SolverConfig cfg;
    cfg.method = m;
    const Eigen::Matrix2d a = (Eigen::Matrix2d() << 2, 1, 1, 3).finished();
    const SolveReport r = solve(linear(a, Eigen::Vector2d(1, 2)), Eigen::Vector2d::Zero(), cfg);
    EXPECT_TRUE(r.converged) << method_name(m);
    EXPECT_LT((a * r.solution - Eigen::Vector2d(1, 2)).norm(), 1e-8);
  }
  EXPECT_THROW(parse_method("simplex"), std::invalid_argument);
}

TEST(SolverConfig, Validation) {
  SolverConfig cfg;
  cfg.max_iters = -1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = SolverConfig{};
  cfg.tr_delta0 = 200.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = SolverConfig{};
  cfg.f_tol = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}
