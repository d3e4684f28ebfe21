#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "learn2mix/random.hpp"

namespace l2m {

/// Class losses L_i(theta) = (a_i / 2) ||theta - theta*||^2 + b_i with a shared
/// minimizer, so each class is a_i-strongly convex with an a_i-Lipschitz gradient.
struct QuadraticInstance {
  Eigen::VectorXd curvature;  // a
  Eigen::VectorXd offset;     // b
  Eigen::VectorXd minimizer;  // theta*
  std::vector<double> fixed_proportions;

  /// Throws InvalidSize.
  void validate() const;

  std::size_t num_classes() const noexcept { return static_cast<std::size_t>(curvature.size()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(minimizer.size()); }
  double mu_star() const { return curvature.minCoeff(); }
  double l_star() const { return curvature.maxCoeff(); }

  Eigen::VectorXd class_losses(const Eigen::VectorXd& theta) const;
  /// (sum_i alpha_i a_i)(theta - theta*).
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta, const std::vector<double>& alpha) const;
  /// b / sum(b), the limit of the mixing parameters.
  std::vector<double> stable_mixing() const;
  /// max(|1 - eta mu*|, |1 - eta L*|).
  double contraction(double eta) const;
  /// Lipschitz constant of the gradient in alpha over simplex differences at theta:
  /// ||a - mean(a)||_2 ||theta - theta*||.
  double alpha_lipschitz(const Eigen::VectorXd& theta) const;
};

struct ConvergenceReport {
  std::size_t steps = 0;
  double rho = 0.0;
  double initial_distance = 0.0;
  double final_distance = 0.0;
  double final_alpha_error = 0.0;  // sup norm against b / sum(b)
  std::vector<double> final_alpha;
  std::size_t envelope_violations = 0;
  std::size_t gradient_bound_violations = 0;
  std::size_t alpha_contraction_violations = 0;
  std::size_t simplex_violations = 0;
};

/// Gradient descent on the mixed loss with the learn2mix update on alpha,
/// starting from alpha = fixed proportions. Every iterate is checked against the
/// geometric envelope rho^t ||theta0 - theta*||, the gradient sandwich, and the
/// (1 - gamma) contraction of alpha toward the current normalized losses.
/// Throws StepDiverged when ||theta|| exceeds 1e12.
ConvergenceReport run_convergence(const QuadraticInstance& inst, const Eigen::VectorXd& theta0, double eta, double gamma,
                      std::size_t steps);

struct GradientBoundCheck {
  bool lower_ok = true;
  bool upper_ok = true;
  double gradient_norm = 0.0;
  double lower_bound = 0.0;  // (mu*/2) ||theta - theta*||
  double upper_bound = 0.0;  // L* ||theta - theta*||
  double lower_margin = 0.0;
  double upper_margin = 0.0;
};

/// Evaluates (mu*/2) d <= ||grad|| <= L* d with a 1e-12 relative tolerance.
GradientBoundCheck check_gradient_bounds(const QuadraticInstance& inst, const Eigen::VectorXd& theta,
                                 const std::vector<double>& alpha);

struct StepComparison {
  std::vector<double> alpha;        // one learn2mix update from the fixed proportions
  double learn2mix_distance = 0.0;  // ||theta - eta grad(theta, alpha) - theta*||
  double classical_distance = 0.0;  // same with the fixed proportions
  bool step_no_worse = false;       // learn2mix_distance <= classical_distance
  /// Sign condition on the gamma bound with the loss-gap vector summed to a scalar.
  double condition = 0.0;
  bool condition_holds = false;
  std::optional<double> beta;  // set when the bound's denominator is positive
  double alpha_lipschitz = 0.0;
};

StepComparison compare_step(const QuadraticInstance& inst, const Eigen::VectorXd& theta, double eta, double gamma,
                             const Eigen::VectorXd& prev_losses);

/// Random instance: a_i in [0.5, 5], b_i in [0.1, 1], theta* standard normal,
/// fixed proportions from normalized exponential draws.
QuadraticInstance random_instance(Rng& rng, std::size_t num_classes, std::size_t dim);

/// The reference instance a = [1, 2, 4], b = [0.2, 0.3, 0.5], theta* = 0 in R^5, uniform fixed proportions.
QuadraticInstance reference_instance();

struct GradientBoundSweep {
  std::size_t draws = 0;
  std::size_t violations = 0;
  double min_lower_margin = 0.0;
  double min_upper_margin = 0.0;
};

struct ZeroGammaSweep {
  std::size_t instances = 0;
  double max_relative_difference = 0.0;
};

struct StepComparisonSweep {
  std::size_t draws = 0;
  std::size_t step_no_worse = 0;
  std::size_t condition_holds = 0;
  std::size_t both = 0;
  std::size_t beta_computed = 0;
  double hold_fraction = 0.0;
};

GradientBoundSweep sweep_gradient_bounds(std::uint64_t seed, std::size_t draws);
ZeroGammaSweep sweep_zero_gamma(std::uint64_t seed, std::size_t instances);
/// Instances whose hardest class is also the most curved, small gamma, eta below 1/L*.
StepComparisonSweep sweep_step_comparison(std::uint64_t seed, std::size_t draws);

struct TheoryReport {
  ConvergenceReport convergence;
  double convergence_seconds = 0.0;
  GradientBoundSweep gradient_bounds;
  double gradient_bounds_seconds = 0.0;
  ZeroGammaSweep zero_gamma;
  StepComparisonSweep step_comparison;
  double eta = 0.4;
  double gamma = 0.1;

  /// The gated checks: convergence limits and envelope, gradient-bound sweep, zero-gamma agreement.
  bool passed() const;
};

TheoryReport verify_theory(std::uint64_t seed, std::size_t steps = 10000, std::size_t gradient_draws = 10000,
                           std::size_t comparison_draws = 1000);

}  // namespace l2m
