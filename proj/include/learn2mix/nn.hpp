#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "learn2mix/data.hpp"
#include "learn2mix/sampler.hpp"

namespace l2m {

enum class Activation : std::uint32_t { identity = 0, relu = 1, softmax = 2 };

/// Fully connected network with all parameters in one flat vector. Layer l
/// stores its weight matrix (out x in, column-major) followed by its bias.
/// Softmax is only allowed on the last layer.
class DenseNet {
 public:
  DenseNet() = default;
  /// widths = {d, h1, ..., k_out}; one activation per layer. Parameters start at zero.
  DenseNet(std::vector<std::size_t> widths, std::vector<Activation> activations);

  /// d -> hidden -> ReLU -> 1, uniformly initialized.
  static DenseNet regression(std::size_t input_dim, std::size_t hidden, std::uint64_t seed);
  /// d -> hidden -> ReLU -> k logits -> softmax, uniformly initialized.
  static DenseNet classifier(std::size_t input_dim, std::size_t num_classes, std::size_t hidden, std::uint64_t seed);

  /// U[-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
  void init_uniform(std::uint64_t seed);

  std::size_t num_layers() const noexcept { return activations_.size(); }
  std::size_t input_dim() const noexcept { return widths_.front(); }
  std::size_t output_dim() const noexcept { return widths_.back(); }
  const std::vector<std::size_t>& widths() const noexcept { return widths_; }
  const std::vector<Activation>& activations() const noexcept { return activations_; }
  Activation output_activation() const noexcept { return activations_.back(); }
  std::size_t parameter_count() const noexcept { return static_cast<std::size_t>(params_.size()); }

  Eigen::VectorXd& parameters() noexcept { return params_; }
  const Eigen::VectorXd& parameters() const noexcept { return params_; }

  Eigen::Map<Eigen::MatrixXd> weight(std::size_t layer);
  Eigen::Map<const Eigen::MatrixXd> weight(std::size_t layer) const;
  Eigen::Map<Eigen::VectorXd> bias(std::size_t layer);
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;

  /// Throws DimensionMismatch.
  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  /// Columns are samples.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;
  /// Output of the last layer before its activation.
  Eigen::MatrixXd logits_batch(const Eigen::MatrixXd& inputs) const;

  bool operator==(const DenseNet& other) const;

 private:
  std::size_t weight_offset(std::size_t layer) const { return offsets_.at(layer); }
  std::size_t bias_offset(std::size_t layer) const { return offsets_.at(layer) + widths_[layer] * widths_[layer + 1]; }

  std::vector<std::size_t> widths_;
  std::vector<Activation> activations_;
  std::vector<std::size_t> offsets_;
  Eigen::VectorXd params_;
};

struct MeanSquaredError {};
struct CrossEntropy {};
/// Class-wise focal loss (1/k) sum_i -w_i (1 - p_i)^focusing log p_i, where
/// p_i = exp(-CE_i) and CE_i is the mean cross-entropy of class i in the batch.
struct FocalLoss {
  std::vector<double> class_weights;
  double focusing = 2.0;
};
using LossKind = std::variant<MeanSquaredError, CrossEntropy, FocalLoss>;

/// Focal class weights from fixed proportions: proportional to 1/(alpha_i N), scaled to sum to k.
std::vector<double> focal_class_weights(std::span<const double> fixed_proportions, std::size_t total);

/// Inputs and targets as columns.
struct Batch {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;
  std::vector<std::size_t> classes;

  std::size_t size() const noexcept { return classes.size(); }
};

Batch make_batch(const ClassPartitionedDataset& ds, std::span<const SampleRef> refs);
Batch make_batch(std::span<const Sample> samples);

struct LossGrad {
  double loss = 0.0;
  Eigen::VectorXd gradient;
  /// Base per-sample loss: squared error for mse, cross-entropy for the others.
  Eigen::VectorXd per_sample;
};

/// Batch loss and exact gradient. MSE and cross-entropy use the batch mean of
/// per-sample losses. Throws DimensionMismatch, InvalidSize, NonFiniteLoss.
LossGrad loss_and_grad(const DenseNet& net, const Batch& batch, const LossKind& kind);

/// Base per-sample losses without the gradient.
Eigen::VectorXd per_sample_losses(const DenseNet& net, const Batch& batch, const LossKind& kind);

/// Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8 and bias correction.
struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::uint64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  AdamState(std::size_t parameter_count, double learning_rate);
};

void adam_step(DenseNet& net, const Eigen::VectorXd& grad, AdamState& state);
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state);
void sgd_step(DenseNet& net, const Eigen::VectorXd& grad, double eta);
void sgd_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double eta);

/// Binary checkpoint: "L2MCKPT1", u32 version, u32 loss code, u32 layer count,
/// per layer (u64 in, u64 out, u32 activation), u64 parameter count, then the
/// float64 parameters. All integers and floats little-endian.
enum class LossCode : std::uint32_t { mse = 0, cross_entropy = 1, focal = 2 };

struct Checkpoint {
  DenseNet net;
  LossCode loss = LossCode::mse;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace l2m
