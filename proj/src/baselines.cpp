#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "learn2mix/errors.hpp"
#include "learn2mix/train.hpp"

namespace l2m {

double curriculum_fraction(std::size_t epoch, double start, double inc, std::size_t step_length) {
  if (step_length == 0) throw InvalidSize("pacing step length must be positive");
  const auto steps = static_cast<double>(epoch / step_length);
  return std::min(start * std::pow(inc, steps), 1.0);
}

std::vector<std::size_t> sample_without_replacement(const Eigen::VectorXd& weights, std::size_t count, Rng& rng) {
  const auto n = static_cast<std::size_t>(weights.size());
  if (count > n) throw InvalidSize("cannot draw more distinct items than available");
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double v = weights[static_cast<Eigen::Index>(j)];
    if (!(v >= 0.0) || !std::isfinite(v)) throw NegativeLoss("sampling weights must be finite and nonnegative");
    w[j] = v;
  }
  std::vector<bool> taken(n, false);
  std::vector<std::size_t> out;
  out.reserve(count);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t r = 0; r < count; ++r) {
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!taken[j]) total += w[j];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double run = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (taken[j] || w[j] == 0.0) continue;
        run += w[j];
        pick = j;
        if (target < run) break;
      }
    } else {
      std::uniform_int_distribution<std::size_t> any(0, n - r - 1);
      auto skip = any(rng);
      for (std::size_t j = 0; j < n; ++j) {
        if (taken[j]) continue;
        if (skip-- == 0) {
          pick = j;
          break;
        }
      }
    }
    taken[pick] = true;
    out.push_back(pick);
  }
  return out;
}

std::vector<double> self_taught_scores(const DenseNet& net, const ClassPartitionedDataset& ds) {
  if (net.output_activation() != Activation::softmax) throw InvalidSize("self-taught scores need a softmax head");
  std::vector<double> scores;
  scores.reserve(ds.size());
  for (std::size_t c = 0; c < ds.num_classes(); ++c) {
    const auto batch = make_batch(ds.store(c));
    const Eigen::MatrixXd prob = net.forward_batch(batch.inputs);
    for (Eigen::Index j = 0; j < prob.cols(); ++j) {
      scores.push_back(1.0 - prob.col(j).dot(batch.targets.col(j)));
    }
  }
  return scores;
}

}  // namespace l2m
