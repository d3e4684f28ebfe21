#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "learn2mix/data.hpp"
#include "learn2mix/mix.hpp"
#include "learn2mix/nn.hpp"
#include "learn2mix/random.hpp"
#include "learn2mix/sampler.hpp"

namespace l2m {

enum class Strategy { learn2mix, classical, focal, smote, importance_sampling, curriculum };

/// Command line names: learn2mix, classical, focal, smote, is, curriculum.
std::string_view to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view name);
const std::vector<Strategy>& all_strategies();

enum class LossType { mse, cross_entropy };
enum class Optimizer { adam, sgd };

std::string_view to_string(LossType l);
std::optional<LossType> parse_loss(std::string_view name);
std::string_view to_string(Optimizer o);
std::optional<Optimizer> parse_optimizer(std::string_view name);

struct TrainConfig {
  Strategy strategy = Strategy::learn2mix;
  std::size_t epochs = 100;
  std::size_t batch_size = 500;
  double learning_rate = 1e-3;
  double mixing_rate = 0.1;
  std::uint64_t seed = 0;
  LossType loss = LossType::mse;
  Optimizer optimizer = Optimizer::adam;
  /// Test-set evaluation period in epochs; the final epoch is always evaluated.
  std::size_t eval_every = 1;
  /// One optimizer step per epoch on the gradient averaged over all P batches.
  bool step_per_epoch = false;
  double focal_gamma = 2.0;
  std::size_t smote_neighbors = 5;
  /// When false, elapsed_s is left empty so metrics files depend only on the seed.
  bool record_time = true;

  /// Throws UsageError.
  void validate() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  std::optional<double> elapsed_s;
  double train_loss = 0.0;
  std::optional<double> test_loss;
  std::optional<double> accuracy;
  std::optional<double> worst_class_accuracy;
  std::vector<double> class_losses;
  /// Class proportions used for this epoch's batches.
  std::vector<double> alpha;
};

struct TrainResult {
  DenseNet net;
  std::vector<EpochMetrics> history;
};

/// Runs cfg.strategy. test may be null. Throws UsageError for an invalid config.
TrainResult train(const ClassPartitionedDataset& train_set, const ClassPartitionedDataset* test_set, DenseNet net,
                  const TrainConfig& cfg);

TrainResult train_learn2mix(const ClassPartitionedDataset& ds, const ClassPartitionedDataset* test, DenseNet net,
                            TrainConfig cfg);
/// learn2mix with mixing rate 0.
TrainResult train_classical(const ClassPartitionedDataset& ds, const ClassPartitionedDataset* test, DenseNet net,
                            TrainConfig cfg);
TrainResult train_focal(const ClassPartitionedDataset& ds, const ClassPartitionedDataset* test, DenseNet net,
                        TrainConfig cfg);
TrainResult train_smote(const ClassPartitionedDataset& ds, const ClassPartitionedDataset* test, DenseNet net,
                        TrainConfig cfg);
TrainResult train_is(const ClassPartitionedDataset& ds, const ClassPartitionedDataset* test, DenseNet net,
                     TrainConfig cfg);
TrainResult train_curriculum(const ClassPartitionedDataset& ds, const ClassPartitionedDataset* test, DenseNet net,
                             TrainConfig cfg);

/// Batches per epoch: max(1, floor(N / M)).
std::size_t batches_per_epoch(std::size_t total, std::size_t batch_size);

/// Accumulates class-wise losses as the mean over batches of each class's
/// within-batch mean loss, counting only batches where the class appears.
class ClassLossAccumulator {
 public:
  explicit ClassLossAccumulator(std::size_t num_classes);

  void add_batch(std::span<const std::size_t> classes, const Eigen::VectorXd& per_sample);

  /// Classes never seen keep their entry from `previous` and are marked invalid.
  ClassLossVector result(std::span<const double> previous) const;
  const std::vector<std::size_t>& batches_seen() const noexcept { return batches_; }

 private:
  std::vector<double> sum_of_means_;
  std::vector<std::size_t> batches_;
};

/// Class-wise losses of net on recorded epoch batches (sample refs into ds).
ClassLossVector compute_classwise_losses(const DenseNet& net, const ClassPartitionedDataset& ds,
                                         std::span<const std::vector<SampleRef>> epoch_batches, const LossKind& kind,
                                         std::span<const double> previous = {});

struct Evaluation {
  double loss = 0.0;
  std::optional<double> accuracy;
  std::optional<double> worst_class_accuracy;
  std::vector<double> class_accuracy;
  std::vector<double> class_losses;
};

/// Full pass over ds. Accuracy is reported for softmax heads, where argmax ties
/// resolve to the lowest class index.
Evaluation evaluate(const DenseNet& net, const ClassPartitionedDataset& ds, const LossKind& kind);

/// Curriculum pacing min(0.5 * 1.2^floor(t / 10), 1) for zero-based epoch t.
double curriculum_fraction(std::size_t epoch, double start = 0.5, double inc = 1.2, std::size_t step_length = 10);

/// Draws `count` distinct indices with probability proportional to weights,
/// renormalizing after each draw. All-zero weights fall back to uniform.
std::vector<std::size_t> sample_without_replacement(const Eigen::VectorXd& weights, std::size_t count, Rng& rng);

/// 1 - softmax probability of the true class for every sample, class-major order.
std::vector<double> self_taught_scores(const DenseNet& net, const ClassPartitionedDataset& ds);

LossKind base_loss(LossType type);

}  // namespace l2m
