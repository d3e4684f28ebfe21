#include <gtest/gtest.h>

#include <cmath>

#include "learn2mix/errors.hpp"
#include "learn2mix/theory.hpp"

using namespace l2m;

TEST(Quadratic, ReferenceInstance) {
  const auto inst = reference_instance();
  EXPECT_EQ(inst.num_classes(), 3u);
  EXPECT_EQ(inst.dim(), 5u);
  EXPECT_DOUBLE_EQ(inst.contraction(0.4), 0.6);
  const auto star = inst.stable_mixing();
  EXPECT_NEAR(star[0], 0.2, 1e-15);
  EXPECT_NEAR(star[2], 0.5, 1e-15);
}

TEST(Quadratic, GradientByHand) {
  QuadraticInstance inst{Eigen::Vector2d(1.0, 3.0), Eigen::Vector2d(0.1, 0.2), Eigen::Vector2d(1.0, -1.0), {0.5, 0.5}};
  const Eigen::Vector2d theta(2.0, 0.0);
  const auto g = inst.gradient(theta, {0.25, 0.75});
  EXPECT_DOUBLE_EQ(g[0], 2.5);
  EXPECT_DOUBLE_EQ(g[1], 2.5);
  const auto l = inst.class_losses(theta);
  EXPECT_DOUBLE_EQ(l[0], 1.1);
  EXPECT_DOUBLE_EQ(l[1], 3.2);
}

TEST(Quadratic, Validation) {
  QuadraticInstance bad{Eigen::Vector2d(1.0, -1.0), Eigen::Vector2d(0.1, 0.2), Eigen::Vector2d::Zero(), {0.5, 0.5}};
  EXPECT_THROW(bad.validate(), InvalidSize);
}

TEST(Convergence, ReferenceRunConverges) {
  const auto r = run_convergence(reference_instance(), Eigen::VectorXd::Ones(5), 0.4, 0.1, 10000);
  EXPECT_LT(r.final_distance, 1e-8);
  EXPECT_LT(r.final_alpha_error, 1e-6);
  EXPECT_EQ(r.envelope_violations, 0u);
  EXPECT_EQ(r.gradient_bound_violations, 0u);
  EXPECT_EQ(r.alpha_contraction_violations, 0u);
  EXPECT_EQ(r.simplex_violations, 0u);
}

TEST(Convergence, DivergentStepThrows) {
  EXPECT_THROW(run_convergence(reference_instance(), Eigen::VectorXd::Ones(5), 1.0, 0.1, 10000), StepDiverged);
}

TEST(GradientBounds, Sandwich) {
  const auto inst = reference_instance();
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(5, 2.0);
  const auto c = check_gradient_bounds(inst, theta, {0.2, 0.3, 0.5});
  EXPECT_TRUE(c.lower_ok);
  EXPECT_TRUE(c.upper_ok);
  // alpha-weighted curvature is 2.8, so the norm is 2.8 d.
  EXPECT_NEAR(c.gradient_norm, 2.8 * theta.norm(), 1e-12);
  EXPECT_EQ(sweep_gradient_bounds(1, 2000).violations, 0u);
}

TEST(StepComparison, ZeroGammaAgrees) {
  const auto s = sweep_zero_gamma(2, 200);
  EXPECT_EQ(s.instances, 200u);
  EXPECT_LE(s.max_relative_difference, 1e-15);
}

TEST(StepComparison, SweepReport) {
  const auto s = sweep_step_comparison(3, 300);
  EXPECT_EQ(s.draws, 300u);
  EXPECT_GE(s.hold_fraction, 0.0);
  EXPECT_LE(s.hold_fraction, 1.0);
  EXPECT_DOUBLE_EQ(s.hold_fraction, static_cast<double>(s.step_no_worse) / 300.0);
}

TEST(Theory, Report) {
  const auto r = verify_theory(0, 2000, 1000, 100);
  EXPECT_TRUE(r.passed());
}
