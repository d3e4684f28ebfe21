#include "learn2mix/theory.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "learn2mix/errors.hpp"
#include "learn2mix/mix.hpp"

namespace l2m {

namespace {

constexpr double kRelTol = 1e-12;

double sup_distance(const std::vector<double>& x, const std::vector<double>& y) {
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d = std::max(d, std::abs(x[i] - y[i]));
  return d;
}

std::vector<double> normalized(const Eigen::VectorXd& losses) {
  std::vector<double> v(losses.data(), losses.data() + losses.size());
  const auto n = normalize_losses(ClassLossVector::all_valid(v));
  if (!n) throw ZeroTotalLoss("class losses sum to zero");
  return *n;
}

}  // namespace

void QuadraticInstance::validate() const {
  if (curvature.size() == 0) throw InvalidSize("instance needs at least one class");
  if (offset.size() != curvature.size()) throw DimensionMismatch("one offset per class required");
  if (static_cast<Eigen::Index>(fixed_proportions.size()) != curvature.size()) {
    throw DimensionMismatch("one fixed proportion per class required");
  }
  if (minimizer.size() == 0) throw InvalidSize("parameter dimension must be positive");
  if (!(curvature.array() > 0.0).all()) throw InvalidSize("curvatures must be positive");
  if (!(offset.array() > 0.0).all()) throw InvalidSize("offsets must be positive");
  MixingState::initial(fixed_proportions, 0.0);
}

Eigen::VectorXd QuadraticInstance::class_losses(const Eigen::VectorXd& theta) const {
  const double sq = (theta - minimizer).squaredNorm();
  return (0.5 * sq) * curvature + offset;
}

Eigen::VectorXd QuadraticInstance::gradient(const Eigen::VectorXd& theta, const std::vector<double>& alpha) const {
  if (static_cast<Eigen::Index>(alpha.size()) != curvature.size()) throw DimensionMismatch("alpha has wrong length");
  double mixed = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) mixed += alpha[i] * curvature[static_cast<Eigen::Index>(i)];
  return mixed * (theta - minimizer);
}

std::vector<double> QuadraticInstance::stable_mixing() const {
  std::vector<double> out(offset.data(), offset.data() + offset.size());
  return mixing_fixed_point(ClassLossVector::all_valid(out));
}

double QuadraticInstance::contraction(double eta) const {
  return std::max(std::abs(1.0 - eta * mu_star()), std::abs(1.0 - eta * l_star()));
}

double QuadraticInstance::alpha_lipschitz(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd centred = curvature.array() - curvature.mean();
  return centred.norm() * (theta - minimizer).norm();
}

ConvergenceReport run_convergence(const QuadraticInstance& inst, const Eigen::VectorXd& theta0, double eta, double gamma,
                      std::size_t steps) {
  inst.validate();
  if (theta0.size() != inst.minimizer.size()) throw DimensionMismatch("theta0 has wrong dimension");
  if (!(eta > 0.0)) throw InvalidSize("learning rate must be positive");

  ConvergenceReport r;
  r.steps = steps;
  r.rho = inst.contraction(eta);
  r.initial_distance = (theta0 - inst.minimizer).norm();

  Eigen::VectorXd theta = theta0;
  auto state = MixingState::initial(inst.fixed_proportions, gamma);
  double envelope = r.initial_distance;
  for (std::size_t t = 0; t < steps; ++t) {
    const auto losses = inst.class_losses(theta);
    const auto target = normalized(losses);
    const auto grad = inst.gradient(theta, state.alpha);

    const auto cor = check_gradient_bounds(inst, theta, state.alpha);
    if (!cor.lower_ok || !cor.upper_ok) ++r.gradient_bound_violations;

    theta -= eta * grad;
    if (!theta.allFinite() || theta.norm() > 1e12) {
      throw StepDiverged("iterate norm exceeded 1e12 at step " + std::to_string(t + 1));
    }
    const double before = sup_distance(state.alpha, target);
    state = update_mixing(state, ClassLossVector::all_valid(std::vector<double>(losses.data(), losses.data() + losses.size())));
    if (sup_distance(state.alpha, target) > (1.0 - gamma) * before * (1.0 + kRelTol) + 1e-15) {
      ++r.alpha_contraction_violations;
    }
    double sum = 0.0;
    bool nonneg = true;
    for (double a : state.alpha) {
      sum += a;
      nonneg = nonneg && a >= 0.0;
    }
    if (!nonneg || std::abs(sum - 1.0) > kRelTol) ++r.simplex_violations;

    envelope *= r.rho;
    if ((theta - inst.minimizer).norm() > envelope * (1.0 + kRelTol)) ++r.envelope_violations;
  }
  r.final_distance = (theta - inst.minimizer).norm();
  r.final_alpha = state.alpha;
  r.final_alpha_error = sup_distance(state.alpha, inst.stable_mixing());
  return r;
}

GradientBoundCheck check_gradient_bounds(const QuadraticInstance& inst, const Eigen::VectorXd& theta,
                                 const std::vector<double>& alpha) {
  GradientBoundCheck c;
  const double d = (theta - inst.minimizer).norm();
  c.gradient_norm = inst.gradient(theta, alpha).norm();
  c.lower_bound = 0.5 * inst.mu_star() * d;
  c.upper_bound = inst.l_star() * d;
  c.lower_margin = c.gradient_norm - c.lower_bound;
  c.upper_margin = c.upper_bound - c.gradient_norm;
  const double scale = kRelTol * std::max(c.upper_bound, c.gradient_norm);
  c.lower_ok = c.lower_margin >= -scale;
  c.upper_ok = c.upper_margin >= -scale;
  return c;
}

StepComparison compare_step(const QuadraticInstance& inst, const Eigen::VectorXd& theta, double eta, double gamma,
                             const Eigen::VectorXd& prev_losses) {
  inst.validate();
  StepComparison rec;
  const auto fixed = inst.fixed_proportions;
  const auto prev = ClassLossVector::all_valid(std::vector<double>(prev_losses.data(), prev_losses.data() + prev_losses.size()));
  rec.alpha = update_mixing(MixingState::initial(fixed, gamma), prev).alpha;

  rec.learn2mix_distance = (theta - eta * inst.gradient(theta, rec.alpha) - inst.minimizer).norm();
  rec.classical_distance = (theta - eta * inst.gradient(theta, fixed) - inst.minimizer).norm();
  rec.step_no_worse = rec.learn2mix_distance <= rec.classical_distance;

  const double d = (theta - inst.minimizer).norm();
  const Eigen::VectorXd gap = inst.class_losses(theta) - inst.offset;
  double fixed_gap = 0.0;
  for (std::size_t i = 0; i < fixed.size(); ++i) fixed_gap += fixed[i] * gap[static_cast<Eigen::Index>(i)];
  const double numerator = (0.5 * inst.mu_star() - inst.l_star()) * d * d + fixed_gap;
  const double second = d - gap.sum();
  rec.condition = numerator * second;
  rec.condition_holds = rec.condition > 0.0;

  rec.alpha_lipschitz = inst.alpha_lipschitz(theta);
  const auto target = normalize_losses(prev);
  if (target) {
    double shift = 0.0;
    for (std::size_t i = 0; i < fixed.size(); ++i) shift += std::pow((*target)[i] - fixed[i], 2);
    const double denominator = eta * rec.alpha_lipschitz * inst.l_star() * std::sqrt(shift) * second;
    if (denominator > 0.0) rec.beta = numerator / denominator;
  }
  return rec;
}

QuadraticInstance random_instance(Rng& rng, std::size_t num_classes, std::size_t dim) {
  std::uniform_real_distribution<double> curv(0.5, 5.0);
  std::uniform_real_distribution<double> off(0.1, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  QuadraticInstance inst;
  inst.curvature.resize(static_cast<Eigen::Index>(num_classes));
  inst.offset.resize(static_cast<Eigen::Index>(num_classes));
  inst.minimizer.resize(static_cast<Eigen::Index>(dim));
  for (auto& a : inst.curvature) a = curv(rng);
  for (auto& b : inst.offset) b = off(rng);
  for (auto& m : inst.minimizer) m = normal(rng);
  double total = 0.0;
  inst.fixed_proportions.resize(num_classes);
  for (auto& p : inst.fixed_proportions) {
    p = expo(rng) + 1e-3;
    total += p;
  }
  for (auto& p : inst.fixed_proportions) p /= total;
  renormalize_simplex(inst.fixed_proportions);
  return inst;
}

QuadraticInstance reference_instance() {
  QuadraticInstance inst;
  inst.curvature = Eigen::Vector3d(1.0, 2.0, 4.0);
  inst.offset = Eigen::Vector3d(0.2, 0.3, 0.5);
  inst.minimizer = Eigen::VectorXd::Zero(5);
  inst.fixed_proportions = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  renormalize_simplex(inst.fixed_proportions);
  return inst;
}

namespace {

Eigen::VectorXd random_point(Rng& rng, const Eigen::VectorXd& centre, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::VectorXd x = centre;
  for (auto& v : x) v += normal(rng);
  return x;
}

std::vector<double> random_simplex(Rng& rng, std::size_t k) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> a(k);
  double total = 0.0;
  for (auto& v : a) {
    v = expo(rng);
    total += v;
  }
  for (auto& v : a) v /= total;
  renormalize_simplex(a);
  return a;
}

}  // namespace

GradientBoundSweep sweep_gradient_bounds(std::uint64_t seed, std::size_t draws) {
  auto rng = make_stream(seed, StreamTag::theory, {1});
  std::uniform_int_distribution<std::size_t> classes(1, 8);
  std::uniform_int_distribution<std::size_t> dims(1, 12);
  std::uniform_real_distribution<double> log_scale(-6.0, 3.0);
  GradientBoundSweep s;
  s.draws = draws;
  s.min_lower_margin = s.min_upper_margin = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < draws; ++n) {
    const auto inst = random_instance(rng, classes(rng), dims(rng));
    const auto theta = random_point(rng, inst.minimizer, std::pow(10.0, log_scale(rng)));
    const auto c = check_gradient_bounds(inst, theta, random_simplex(rng, inst.num_classes()));
    if (!c.lower_ok || !c.upper_ok) ++s.violations;
    s.min_lower_margin = std::min(s.min_lower_margin, c.lower_margin);
    s.min_upper_margin = std::min(s.min_upper_margin, c.upper_margin);
  }
  return s;
}

ZeroGammaSweep sweep_zero_gamma(std::uint64_t seed, std::size_t instances) {
  auto rng = make_stream(seed, StreamTag::theory, {2});
  std::uniform_int_distribution<std::size_t> classes(2, 8);
  std::uniform_int_distribution<std::size_t> dims(1, 12);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  ZeroGammaSweep s;
  s.instances = instances;
  for (std::size_t n = 0; n < instances; ++n) {
    const auto inst = random_instance(rng, classes(rng), dims(rng));
    const auto theta = random_point(rng, inst.minimizer, 1.0);
    const auto prev = inst.class_losses(random_point(rng, inst.minimizer, 1.0));
    const double eta = unit(rng) / inst.l_star();
    const auto rec = compare_step(inst, theta, eta, 0.0, prev);
    const double scale = std::max({rec.learn2mix_distance, rec.classical_distance, 1e-300});
    s.max_relative_difference =
        std::max(s.max_relative_difference, std::abs(rec.learn2mix_distance - rec.classical_distance) / scale);
  }
  return s;
}

StepComparisonSweep sweep_step_comparison(std::uint64_t seed, std::size_t draws) {
  auto rng = make_stream(seed, StreamTag::theory, {3});
  std::uniform_int_distribution<std::size_t> classes(2, 6);
  std::uniform_int_distribution<std::size_t> dims(1, 10);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  std::uniform_real_distribution<double> mixing(0.01, 0.1);
  StepComparisonSweep s;
  s.draws = draws;
  for (std::size_t n = 0; n < draws; ++n) {
    auto inst = random_instance(rng, classes(rng), dims(rng));
    // Align curvature and offset order so the most curved class is also the hardest.
    std::sort(inst.curvature.begin(), inst.curvature.end());
    std::sort(inst.offset.begin(), inst.offset.end());
    const auto theta = random_point(rng, inst.minimizer, 1.0);
    const auto prev = inst.class_losses(random_point(rng, theta, 0.1));
    const double eta = unit(rng) / inst.l_star();
    const auto rec = compare_step(inst, theta, eta, mixing(rng), prev);
    if (rec.step_no_worse) ++s.step_no_worse;
    if (rec.condition_holds) ++s.condition_holds;
    if (rec.step_no_worse && rec.condition_holds) ++s.both;
    if (rec.beta) ++s.beta_computed;
  }
  s.hold_fraction = draws ? static_cast<double>(s.step_no_worse) / static_cast<double>(draws) : 0.0;
  return s;
}

bool TheoryReport::passed() const {
  return convergence.final_distance < 1e-8 && convergence.final_alpha_error < 1e-6 && convergence.envelope_violations == 0 &&
         convergence.gradient_bound_violations == 0 && gradient_bounds.violations == 0 &&
         zero_gamma.max_relative_difference <= 1e-15;
}

TheoryReport verify_theory(std::uint64_t seed, std::size_t steps, std::size_t gradient_draws,
                           std::size_t comparison_draws) {
  using Clock = std::chrono::steady_clock;
  TheoryReport r;
  const auto inst = reference_instance();
  auto t0 = Clock::now();
  r.convergence = run_convergence(inst, Eigen::VectorXd::Ones(5), r.eta, r.gamma, steps);
  r.convergence_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  t0 = Clock::now();
  r.gradient_bounds = sweep_gradient_bounds(seed, gradient_draws);
  r.gradient_bounds_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  r.zero_gamma = sweep_zero_gamma(seed, comparison_draws);
  r.step_comparison = sweep_step_comparison(seed, comparison_draws);
  return r;
}

}  // namespace l2m
