#include "learn2mix/train.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>

#include "learn2mix/errors.hpp"
#include "learn2mix/smote.hpp"

namespace l2m {

namespace {

constexpr std::array<std::pair<Strategy, std::string_view>, 6> kStrategyNames{{
    {Strategy::learn2mix, "learn2mix"},
    {Strategy::classical, "classical"},
    {Strategy::focal, "focal"},
    {Strategy::smote, "smote"},
    {Strategy::importance_sampling, "is"},
    {Strategy::curriculum, "curriculum"},
}};

}  // namespace

std::string_view to_string(Strategy s) {
  for (const auto& [k, name] : kStrategyNames) {
    if (k == s) return name;
  }
  return "unknown";
}

std::optional<Strategy> parse_strategy(std::string_view name) {
  for (const auto& [k, n] : kStrategyNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

const std::vector<Strategy>& all_strategies() {
  static const std::vector<Strategy> all{Strategy::learn2mix, Strategy::classical,           Strategy::focal,
                                         Strategy::smote,     Strategy::importance_sampling, Strategy::curriculum};
  return all;
}

std::string_view to_string(LossType l) { return l == LossType::mse ? "mse" : "cross_entropy"; }

std::optional<LossType> parse_loss(std::string_view name) {
  if (name == "mse") return LossType::mse;
  if (name == "cross_entropy" || name == "ce") return LossType::cross_entropy;
  return std::nullopt;
}

std::string_view to_string(Optimizer o) { return o == Optimizer::adam ? "adam" : "sgd"; }

std::optional<Optimizer> parse_optimizer(std::string_view name) {
  if (name == "adam") return Optimizer::adam;
  if (name == "sgd") return Optimizer::sgd;
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw UsageError("epochs must be at least 1");
  if (batch_size < 1) throw UsageError("batch size must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw UsageError("learning rate must be positive");
  if (!(mixing_rate >= 0.0 && mixing_rate < 1.0)) throw UsageError("mixing rate must lie in [0, 1)");
  if (eval_every < 1) throw UsageError("eval_every must be at least 1");
  if (!(focal_gamma >= 0.0)) throw UsageError("focal gamma must be nonnegative");
  if (smote_neighbors < 1) throw UsageError("SMOTE needs at least one neighbor");
  if (strategy == Strategy::importance_sampling && batch_size < 2) {
    throw UsageError("importance sampling needs a batch size of at least 2");
  }
}

LossKind base_loss(LossType type) {
  if (type == LossType::mse) return MeanSquaredError{};
  return CrossEntropy{};
}

std::size_t batches_per_epoch(std::size_t total, std::size_t batch_size) {
  if (batch_size < 1) throw InvalidSize("batch size must be at least 1");
  return std::max<std::size_t>(1, total / batch_size);
}

ClassLossAccumulator::ClassLossAccumulator(std::size_t num_classes)
    : sum_of_means_(num_classes, 0.0), batches_(num_classes, 0) {}

void ClassLossAccumulator::add_batch(std::span<const std::size_t> classes, const Eigen::VectorXd& per_sample) {
  if (static_cast<Eigen::Index>(classes.size()) != per_sample.size()) {
    throw DimensionMismatch("one loss per batch sample required");
  }
  const auto k = sum_of_means_.size();
  std::vector<double> sum(k, 0.0);
  std::vector<std::size_t> count(k, 0);
  for (std::size_t j = 0; j < classes.size(); ++j) {
    if (classes[j] >= k) throw DimensionMismatch("class id out of range");
    sum[classes[j]] += per_sample[static_cast<Eigen::Index>(j)];
    ++count[classes[j]];
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (count[i] == 0) continue;
    sum_of_means_[i] += sum[i] / static_cast<double>(count[i]);
    ++batches_[i];
  }
}

ClassLossVector ClassLossAccumulator::result(std::span<const double> previous) const {
  const auto k = sum_of_means_.size();
  ClassLossVector lv{std::vector<double>(k, 0.0), std::vector<bool>(k, false)};
  for (std::size_t i = 0; i < k; ++i) {
    if (batches_[i] > 0) {
      lv.losses[i] = sum_of_means_[i] / static_cast<double>(batches_[i]);
      lv.valid[i] = true;
    } else if (i < previous.size()) {
      lv.losses[i] = previous[i];
    }
  }
  return lv;
}

ClassLossVector compute_classwise_losses(const DenseNet& net, const ClassPartitionedDataset& ds,
                                         std::span<const std::vector<SampleRef>> epoch_batches, const LossKind& kind,
                                         std::span<const double> previous) {
  ClassLossAccumulator acc(ds.num_classes());
  for (const auto& refs : epoch_batches) {
    if (refs.empty()) continue;
    const auto batch = make_batch(ds, refs);
    acc.add_batch(batch.classes, per_sample_losses(net, batch, kind));
  }
  return acc.result(previous);
}

Evaluation evaluate(const DenseNet& net, const ClassPartitionedDataset& ds, const LossKind& kind) {
  const bool classify = net.output_activation() == Activation::softmax;
  Evaluation ev;
  double total = 0.0;
  std::size_t correct_all = 0;
  for (std::size_t c = 0; c < ds.num_classes(); ++c) {
    const auto batch = make_batch(ds.store(c));
    const auto losses = per_sample_losses(net, batch, kind);
    total += losses.sum();
    ev.class_losses.push_back(losses.mean());
    if (!classify) continue;
    const Eigen::MatrixXd out = net.forward_batch(batch.inputs);
    std::size_t correct = 0;
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      Eigen::Index best = 0;
      for (Eigen::Index r = 1; r < out.rows(); ++r) {
        if (out(r, j) > out(best, j)) best = r;
      }
      if (static_cast<std::size_t>(best) == c) ++correct;
    }
    correct_all += correct;
    ev.class_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(batch.size()));
  }
  ev.loss = total / static_cast<double>(ds.size());
  if (classify) {
    ev.accuracy = static_cast<double>(correct_all) / static_cast<double>(ds.size());
    ev.worst_class_accuracy = *std::min_element(ev.class_accuracy.begin(), ev.class_accuracy.end());
  }
  return ev;
}

namespace {

using Clock = std::chrono::steady_clock;

class Stepper {
 public:
  Stepper(const TrainConfig& cfg, std::size_t parameter_count)
      : kind_(cfg.optimizer), lr_(cfg.learning_rate), adam_(parameter_count, cfg.learning_rate) {}

  void step(DenseNet& net, const Eigen::VectorXd& grad) {
    if (kind_ == Optimizer::adam) {
      adam_step(net, grad, adam_);
    } else {
      sgd_step(net, grad, lr_);
    }
  }

 private:
  Optimizer kind_;
  double lr_;
  AdamState adam_;
};

// Shared bookkeeping for every strategy: timing, carry-forward of class
// losses, and periodic evaluation.
class Recorder {
 public:
  Recorder(const ClassPartitionedDataset& ds, const ClassPartitionedDataset* test, const TrainConfig& cfg)
      : ds_(ds), test_(test), cfg_(cfg), base_(base_loss(cfg.loss)) {}

  void start() { t0_ = Clock::now(); }
  void stop() { elapsed_ += std::chrono::duration<double>(Clock::now() - t0_).count(); }

  /// Fills carried values for classes absent this epoch and returns the loss vector.
  ClassLossVector class_losses(const DenseNet& net, const ClassLossAccumulator& acc) {
    if (previous_.empty()) {
      const auto& seen = acc.batches_seen();
      if (std::find(seen.begin(), seen.end(), std::size_t{0}) != seen.end()) {
        previous_.assign(ds_.num_classes(), 0.0);
        for (std::size_t c = 0; c < ds_.num_classes(); ++c) {
          if (seen[c] == 0) previous_[c] = per_sample_losses(net, make_batch(ds_.store(c)), base_).mean();
        }
      }
    }
    auto lv = acc.result(previous_);
    previous_ = lv.losses;
    return lv;
  }

  void record(const DenseNet& net, std::size_t epoch, double train_loss, std::vector<double> class_losses,
              std::vector<double> alpha) {
    EpochMetrics m;
    m.epoch = epoch;
    if (cfg_.record_time) m.elapsed_s = elapsed_;
    m.train_loss = train_loss;
    m.class_losses = std::move(class_losses);
    m.alpha = std::move(alpha);
    if (test_ && (epoch % cfg_.eval_every == 0 || epoch == cfg_.epochs)) {
      const auto ev = evaluate(net, *test_, base_);
      m.test_loss = ev.loss;
      m.accuracy = ev.accuracy;
      m.worst_class_accuracy = ev.worst_class_accuracy;
    }
    history.push_back(std::move(m));
  }

  const LossKind& base() const noexcept { return base_; }

  std::vector<EpochMetrics> history;

 private:
  const ClassPartitionedDataset& ds_;
  const ClassPartitionedDataset* test_;
  const TrainConfig& cfg_;
  LossKind base_;
  std::vector<double> previous_;
  Clock::time_point t0_{};
  double elapsed_ = 0.0;
};

using StopRule = std::function<bool(const std::vector<EpochMetrics>&)>;

// Cyclic class-wise batching with the mixing update. Classical, focal, and
// SMOTE training are this loop with gamma = 0 and a different loss or dataset.
TrainResult mixing_loop(const ClassPartitionedDataset& ds, const ClassPartitionedDataset* test, DenseNet net,
                        const TrainConfig& cfg, const LossKind& step_loss, double gamma, std::size_t epoch_total,
                        const StopRule& stop = {}) {
  auto state = MixingState::initial(ds.fixed_proportions(), gamma);
  CyclicCursor cursor(ds.class_sizes());
  Stepper stepper(cfg, net.parameter_count());
  Recorder rec(ds, test, cfg);
  const auto batches = batches_per_epoch(epoch_total, cfg.batch_size);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rec.start();
    cursor.begin_epoch(cfg.seed);
    const auto plan = allocate_counts(state.alpha, cfg.batch_size);
    ClassLossAccumulator acc(ds.num_classes());
    double loss_sum = 0.0;
    Eigen::VectorXd grad_sum;
    if (cfg.step_per_epoch) grad_sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.parameter_count()));
    for (std::size_t p = 0; p < batches; ++p) {
      const auto refs = cursor.next_batch(plan);
      const auto batch = make_batch(ds, refs);
      const auto lg = loss_and_grad(net, batch, step_loss);
      acc.add_batch(batch.classes, lg.per_sample);
      loss_sum += lg.loss;
      if (cfg.step_per_epoch) {
        grad_sum += lg.gradient;
      } else {
        stepper.step(net, lg.gradient);
      }
    }
    if (cfg.step_per_epoch) stepper.step(net, grad_sum / static_cast<double>(batches));
    rec.stop();

    auto lv = rec.class_losses(net, acc);
    rec.record(net, epoch, loss_sum / static_cast<double>(batches), lv.losses, state.alpha);
    state = update_mixing(state, lv);
    if (stop && stop(rec.history)) break;
  }
  return {std::move(net), std::move(rec.history)};
}

void check_head(const DenseNet& net, const ClassPartitionedDataset& ds, const TrainConfig& cfg) {
  if (net.input_dim() != ds.feature_dim()) throw UsageError("network input width differs from the feature dimension");
  if (net.output_dim() != ds.label_dim()) throw UsageError("network output width differs from the label dimension");
  const bool softmax = net.output_activation() == Activation::softmax;
  if (softmax != (cfg.loss == LossType::cross_entropy)) {
    throw UsageError("cross-entropy needs a softmax head and mse needs a regression head");
  }
}

void require_classification(const TrainConfig& cfg, std::string_view who) {
  if (cfg.loss != LossType::cross_entropy) throw UsageError(std::string(who) + " training needs a classification task");
}

std::vector<SampleRef> all_refs(const ClassPartitionedDataset& ds) {
  std::vector<SampleRef> refs;
  refs.reserve(ds.size());
  for (std::size_t c = 0; c < ds.num_classes(); ++c) {
    for (std::size_t j = 0; j < ds.store(c).size(); ++j) refs.push_back({c, j});
  }
  return refs;
}

}  // namespace

TrainResult train_learn2mix(const ClassPartitionedDataset& ds, const ClassPartitionedDataset* test, DenseNet net,
                            TrainConfig cfg) {
  cfg.validate();
  check_head(net, ds, cfg);
  return mixing_loop(ds, test, std::move(net), cfg, base_loss(cfg.loss), cfg.mixing_rate, ds.size());
}

TrainResult train_classical(const ClassPartitionedDataset& ds, const ClassPartitionedDataset* test, DenseNet net,
                            TrainConfig cfg) {
  cfg.validate();
  check_head(net, ds, cfg);
  return mixing_loop(ds, test, std::move(net), cfg, base_loss(cfg.loss), 0.0, ds.size());
}

TrainResult train_focal(const ClassPartitionedDataset& ds, const ClassPartitionedDataset* test, DenseNet net,
                        TrainConfig cfg) {
  cfg.validate();
  check_head(net, ds, cfg);
  require_classification(cfg, "focal");
  const FocalLoss focal{focal_class_weights(ds.fixed_proportions(), ds.size()), cfg.focal_gamma};
  return mixing_loop(ds, test, std::move(net), cfg, focal, 0.0, ds.size());
}

TrainResult train_smote(const ClassPartitionedDataset& ds, const ClassPartitionedDataset* test, DenseNet net,
                        TrainConfig cfg) {
  cfg.validate();
  check_head(net, ds, cfg);
  require_classification(cfg, "SMOTE");
  const auto over = smote_oversample(ds, cfg.seed, cfg.smote_neighbors);
  return mixing_loop(over.dataset, test, std::move(net), cfg, base_loss(cfg.loss), 0.0, ds.size());
}

TrainResult train_is(const ClassPartitionedDataset& ds, const ClassPartitionedDataset* test, DenseNet net,
                     TrainConfig cfg) {
  cfg.validate();
  check_head(net, ds, cfg);
  Stepper stepper(cfg, net.parameter_count());
  Recorder rec(ds, test, cfg);
  const auto base = base_loss(cfg.loss);
  const auto batches = batches_per_epoch(ds.size(), cfg.batch_size);
  const auto m = std::min(cfg.batch_size, ds.size());
  const auto subset = std::max<std::size_t>(1, m / 2);
  const auto pool = all_refs(ds);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rec.start();
    auto rng = make_stream(cfg.seed, StreamTag::importance, {epoch});
    auto order = pool;
    std::shuffle(order.begin(), order.end(), rng);
    ClassLossAccumulator acc(ds.num_classes());
    double loss_sum = 0.0;
    for (std::size_t p = 0; p < batches; ++p) {
      const std::span<const SampleRef> refs(order.data() + p * m, m);
      const auto batch = make_batch(ds, refs);
      const auto losses = per_sample_losses(net, batch, base);
      acc.add_batch(batch.classes, losses);
      std::vector<SampleRef> chosen;
      chosen.reserve(subset);
      for (auto j : sample_without_replacement(losses, subset, rng)) chosen.push_back(refs[j]);
      const auto lg = loss_and_grad(net, make_batch(ds, chosen), base);
      loss_sum += lg.loss;
      stepper.step(net, lg.gradient);
    }
    rec.stop();
    const auto lv = rec.class_losses(net, acc);
    rec.record(net, epoch, loss_sum / static_cast<double>(batches), lv.losses, ds.fixed_proportions());
  }
  return {std::move(net), std::move(rec.history)};
}

TrainResult train_curriculum(const ClassPartitionedDataset& ds, const ClassPartitionedDataset* test, DenseNet net,
                             TrainConfig cfg) {
  cfg.validate();
  check_head(net, ds, cfg);
  require_classification(cfg, "curriculum");

  // Warm-up on uniform batches until the training loss plateaus; only used for scoring.
  TrainConfig warm_cfg = cfg;
  warm_cfg.epochs = 100;
  warm_cfg.step_per_epoch = false;
  const StopRule plateau = [](const std::vector<EpochMetrics>& h) {
    if (h.size() <= 5) return false;
    const double before = h[h.size() - 6].train_loss;
    const double now = h.back().train_loss;
    return before <= 0.0 || (before - now) / before < 1e-4;
  };
  const auto warm = mixing_loop(ds, nullptr, net, warm_cfg, base_loss(cfg.loss), 0.0, ds.size(), plateau);
  const auto scores = self_taught_scores(warm.net, ds);
  const auto pool = all_refs(ds);
  std::vector<std::size_t> ranked(pool.size());
  std::iota(ranked.begin(), ranked.end(), std::size_t{0});
  std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  Stepper stepper(cfg, net.parameter_count());
  Recorder rec(ds, test, cfg);
  const auto base = base_loss(cfg.loss);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rec.start();
    const double frac = curriculum_fraction(epoch - 1);
    const auto n = std::max<std::size_t>(
        1, std::min(ds.size(), static_cast<std::size_t>(std::floor(frac * static_cast<double>(ds.size())))));
    std::vector<SampleRef> subset;
    subset.reserve(n);
    std::vector<double> composition(ds.num_classes(), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      subset.push_back(pool[ranked[r]]);
      composition[subset.back().class_id] += 1.0 / static_cast<double>(n);
    }
    auto rng = make_stream(cfg.seed, StreamTag::curriculum, {epoch});
    std::shuffle(subset.begin(), subset.end(), rng);
    const auto m = std::min(cfg.batch_size, n);
    const auto batches = n / m;
    ClassLossAccumulator acc(ds.num_classes());
    double loss_sum = 0.0;
    for (std::size_t p = 0; p < batches; ++p) {
      const std::span<const SampleRef> refs(subset.data() + p * m, m);
      const auto lg = loss_and_grad(net, make_batch(ds, refs), base);
      std::vector<std::size_t> classes(refs.size());
      std::transform(refs.begin(), refs.end(), classes.begin(), [](const SampleRef& r) { return r.class_id; });
      acc.add_batch(classes, lg.per_sample);
      loss_sum += lg.loss;
      stepper.step(net, lg.gradient);
    }
    rec.stop();
    const auto lv = rec.class_losses(net, acc);
    rec.record(net, epoch, loss_sum / static_cast<double>(batches), lv.losses, std::move(composition));
  }
  return {std::move(net), std::move(rec.history)};
}

TrainResult train(const ClassPartitionedDataset& train_set, const ClassPartitionedDataset* test_set, DenseNet net,
                  const TrainConfig& cfg) {
  switch (cfg.strategy) {
    case Strategy::learn2mix:
      return train_learn2mix(train_set, test_set, std::move(net), cfg);
    case Strategy::classical:
      return train_classical(train_set, test_set, std::move(net), cfg);
    case Strategy::focal:
      return train_focal(train_set, test_set, std::move(net), cfg);
    case Strategy::smote:
      return train_smote(train_set, test_set, std::move(net), cfg);
    case Strategy::importance_sampling:
      return train_is(train_set, test_set, std::move(net), cfg);
    case Strategy::curriculum:
      return train_curriculum(train_set, test_set, std::move(net), cfg);
  }
  throw UsageError("unknown strategy");
}

}  // namespace l2m
