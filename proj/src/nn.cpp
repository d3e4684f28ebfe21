#include "learn2mix/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "learn2mix/errors.hpp"
#include "learn2mix/random.hpp"

namespace l2m {

DenseNet::DenseNet(std::vector<std::size_t> widths, std::vector<Activation> activations)
    : widths_(std::move(widths)), activations_(std::move(activations)) {
  if (widths_.size() < 2) throw InvalidSize("network needs an input and an output width");
  if (activations_.size() + 1 != widths_.size()) throw InvalidSize("one activation per layer required");
  for (auto w : widths_) {
    if (w == 0) throw InvalidSize("layer widths must be positive");
  }
  for (std::size_t l = 0; l + 1 < activations_.size(); ++l) {
    if (activations_[l] == Activation::softmax) throw InvalidSize("softmax is only supported on the last layer");
  }
  std::size_t offset = 0;
  for (std::size_t l = 0; l < activations_.size(); ++l) {
    offsets_.push_back(offset);
    offset += widths_[l] * widths_[l + 1] + widths_[l + 1];
  }
  params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(offset));
}

DenseNet DenseNet::regression(std::size_t input_dim, std::size_t hidden, std::uint64_t seed) {
  DenseNet net({input_dim, hidden, 1}, {Activation::relu, Activation::identity});
  net.init_uniform(seed);
  return net;
}

DenseNet DenseNet::classifier(std::size_t input_dim, std::size_t num_classes, std::size_t hidden,
                              std::uint64_t seed) {
  DenseNet net({input_dim, hidden, num_classes}, {Activation::relu, Activation::softmax});
  net.init_uniform(seed);
  return net;
}

void DenseNet::init_uniform(std::uint64_t seed) {
  auto rng = make_stream(seed, StreamTag::init);
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths_[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    auto w = weight(l);
    for (Eigen::Index j = 0; j < w.size(); ++j) w.data()[j] = u(rng);
    auto b = bias(l);
    for (Eigen::Index j = 0; j < b.size(); ++j) b[j] = u(rng);
  }
}

Eigen::Map<Eigen::MatrixXd> DenseNet::weight(std::size_t layer) {
  return {params_.data() + weight_offset(layer), static_cast<Eigen::Index>(widths_[layer + 1]),
          static_cast<Eigen::Index>(widths_[layer])};
}

Eigen::Map<const Eigen::MatrixXd> DenseNet::weight(std::size_t layer) const {
  return {params_.data() + weight_offset(layer), static_cast<Eigen::Index>(widths_[layer + 1]),
          static_cast<Eigen::Index>(widths_[layer])};
}

Eigen::Map<Eigen::VectorXd> DenseNet::bias(std::size_t layer) {
  return {params_.data() + bias_offset(layer), static_cast<Eigen::Index>(widths_[layer + 1])};
}

Eigen::Map<const Eigen::VectorXd> DenseNet::bias(std::size_t layer) const {
  return {params_.data() + bias_offset(layer), static_cast<Eigen::Index>(widths_[layer + 1])};
}

namespace {

Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd out(z.rows(), z.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double m = z.col(j).maxCoeff();
    out.col(j) = (z.col(j).array() - m).exp().matrix();
    out.col(j) /= out.col(j).sum();
  }
  return out;
}

void apply_activation(Eigen::MatrixXd& z, Activation act) {
  switch (act) {
    case Activation::identity:
      break;
    case Activation::relu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::softmax:
      z = softmax_columns(z);
      break;
  }
}

// Pre-activations of every layer plus the layer inputs, for backprop.
struct Trace {
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> pre;
};

Trace trace_forward(const DenseNet& net, const Eigen::MatrixXd& x) {
  if (static_cast<std::size_t>(x.rows()) != net.input_dim()) {
    throw DimensionMismatch("input has " + std::to_string(x.rows()) + " features, network expects " +
                            std::to_string(net.input_dim()));
  }
  Trace t;
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    Eigen::MatrixXd z = net.weight(l) * a;
    z.colwise() += net.bias(l);
    t.inputs.push_back(std::move(a));
    if (l + 1 < net.num_layers()) {
      a = z;
      apply_activation(a, net.activations()[l]);
    }
    t.pre.push_back(std::move(z));
  }
  return t;
}

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& z) {
  const double m = z.maxCoeff();
  return m + std::log((z.array() - m).exp().sum());
}

}  // namespace

Eigen::MatrixXd DenseNet::logits_batch(const Eigen::MatrixXd& inputs) const {
  auto t = trace_forward(*this, inputs);
  return std::move(t.pre.back());
}

Eigen::MatrixXd DenseNet::forward_batch(const Eigen::MatrixXd& inputs) const {
  Eigen::MatrixXd out = logits_batch(inputs);
  apply_activation(out, output_activation());
  return out;
}

Eigen::VectorXd DenseNet::forward(const Eigen::VectorXd& x) const { return forward_batch(x); }

bool DenseNet::operator==(const DenseNet& other) const {
  return widths_ == other.widths_ && activations_ == other.activations_ && params_.size() == other.params_.size() &&
         params_ == other.params_;
}

std::vector<double> focal_class_weights(std::span<const double> fixed_proportions, std::size_t total) {
  if (fixed_proportions.empty() || total == 0) throw InvalidSize("focal weights need classes and samples");
  std::vector<double> inv(fixed_proportions.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < inv.size(); ++i) {
    if (!(fixed_proportions[i] > 0.0)) throw InvalidSize("class proportions must be positive");
    inv[i] = 1.0 / (fixed_proportions[i] * static_cast<double>(total));
    sum += inv[i];
  }
  const double k = static_cast<double>(inv.size());
  for (auto& w : inv) w = w / sum * k;
  return inv;
}

Batch make_batch(const ClassPartitionedDataset& ds, std::span<const SampleRef> refs) {
  Batch b;
  b.inputs.resize(static_cast<Eigen::Index>(ds.feature_dim()), static_cast<Eigen::Index>(refs.size()));
  b.targets.resize(static_cast<Eigen::Index>(ds.label_dim()), static_cast<Eigen::Index>(refs.size()));
  b.classes.reserve(refs.size());
  for (std::size_t j = 0; j < refs.size(); ++j) {
    const auto& s = ds.at(refs[j].class_id, refs[j].index);
    b.inputs.col(static_cast<Eigen::Index>(j)) = s.features;
    b.targets.col(static_cast<Eigen::Index>(j)) = s.label;
    b.classes.push_back(s.class_id);
  }
  return b;
}

Batch make_batch(std::span<const Sample> samples) {
  Batch b;
  if (samples.empty()) return b;
  b.inputs.resize(samples.front().features.size(), static_cast<Eigen::Index>(samples.size()));
  b.targets.resize(samples.front().label.size(), static_cast<Eigen::Index>(samples.size()));
  for (std::size_t j = 0; j < samples.size(); ++j) {
    if (samples[j].features.size() != b.inputs.rows() || samples[j].label.size() != b.targets.rows()) {
      throw DimensionMismatch("samples in a batch must share dimensions");
    }
    b.inputs.col(static_cast<Eigen::Index>(j)) = samples[j].features;
    b.targets.col(static_cast<Eigen::Index>(j)) = samples[j].label;
    b.classes.push_back(samples[j].class_id);
  }
  return b;
}

namespace {

void check_batch(const DenseNet& net, const Batch& batch) {
  if (batch.size() == 0) throw InvalidSize("batch is empty");
  if (batch.inputs.cols() != static_cast<Eigen::Index>(batch.size()) ||
      batch.targets.cols() != static_cast<Eigen::Index>(batch.size())) {
    throw DimensionMismatch("batch columns disagree with class list");
  }
  if (static_cast<std::size_t>(batch.targets.rows()) != net.output_dim()) {
    throw DimensionMismatch("target dimension " + std::to_string(batch.targets.rows()) +
                            " differs from network output " + std::to_string(net.output_dim()));
  }
}

bool is_mse(const LossKind& kind) { return std::holds_alternative<MeanSquaredError>(kind); }

void check_head(const DenseNet& net, const LossKind& kind) {
  const bool softmax = net.output_activation() == Activation::softmax;
  if (is_mse(kind) && softmax) throw InvalidSize("squared error on a softmax head is not supported");
  if (!is_mse(kind) && !softmax) throw InvalidSize("cross-entropy losses need a softmax head");
}

// Per-sample base losses and their derivatives with respect to the last pre-activation.
struct HeadTerms {
  Eigen::VectorXd loss;
  Eigen::MatrixXd dpre;
};

HeadTerms head_terms(const DenseNet& net, const Eigen::MatrixXd& pre, const Batch& batch, const LossKind& kind) {
  const auto n = pre.cols();
  HeadTerms h{Eigen::VectorXd(n), Eigen::MatrixXd(pre.rows(), n)};
  if (is_mse(kind)) {
    Eigen::MatrixXd out = pre;
    apply_activation(out, net.output_activation());
    const Eigen::MatrixXd diff = out - batch.targets;
    const double o = static_cast<double>(pre.rows());
    h.loss = diff.colwise().squaredNorm().transpose() / o;
    h.dpre = (2.0 / o) * diff;
    if (net.output_activation() == Activation::relu) {
      h.dpre = h.dpre.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
    }
    return h;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto z = pre.col(j);
    const auto y = batch.targets.col(j);
    const double lse = log_sum_exp(z);
    const double mass = y.sum();
    h.loss[j] = mass * lse - y.dot(z);
    h.dpre.col(j) = mass * (z.array() - lse).exp().matrix() - y;
  }
  return h;
}

// Focal contribution of one class as a function of its mean cross-entropy L, and dF/dL.
std::pair<double, double> focal_term(double ce, double weight, double focusing) {
  const double q = -std::expm1(-ce);  // 1 - p
  const double value = weight * std::pow(q, focusing) * ce;
  double slope = weight * std::pow(q, focusing);
  if (focusing != 0.0 && ce > 0.0) slope += weight * focusing * ce * std::pow(q, focusing - 1.0) * std::exp(-ce);
  return {value, slope};
}

// Returns the batch loss and fills the per-sample weights on dpre.
double reduce_loss(const HeadTerms& h, const Batch& batch, const LossKind& kind, Eigen::VectorXd& sample_weight) {
  const auto n = h.loss.size();
  if (const auto* focal = std::get_if<FocalLoss>(&kind)) {
    const auto k = focal->class_weights.size();
    if (static_cast<Eigen::Index>(k) != h.dpre.rows()) throw DimensionMismatch("one focal weight per class required");
    if (!(focal->focusing >= 0.0)) throw InvalidSize("focusing parameter must be nonnegative");
    std::vector<double> sum(k, 0.0);
    std::vector<std::size_t> count(k, 0);
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto c = batch.classes[static_cast<std::size_t>(j)];
      if (c >= k) throw DimensionMismatch("class id outside the focal weight vector");
      sum[c] += h.loss[j];
      ++count[c];
    }
    double total = 0.0;
    std::vector<double> per_class_slope(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      if (count[i] == 0) continue;
      const auto [value, slope] = focal_term(sum[i] / static_cast<double>(count[i]), focal->class_weights[i],
                                             focal->focusing);
      total += value;
      per_class_slope[i] = slope / static_cast<double>(count[i]);
    }
    const double inv_k = 1.0 / static_cast<double>(k);
    for (Eigen::Index j = 0; j < n; ++j) sample_weight[j] = inv_k * per_class_slope[batch.classes[static_cast<std::size_t>(j)]];
    return inv_k * total;
  }
  sample_weight.setConstant(1.0 / static_cast<double>(n));
  return h.loss.mean();
}

}  // namespace

LossGrad loss_and_grad(const DenseNet& net, const Batch& batch, const LossKind& kind) {
  check_batch(net, batch);
  check_head(net, kind);
  const auto trace = trace_forward(net, batch.inputs);
  const auto head = head_terms(net, trace.pre.back(), batch, kind);

  LossGrad out;
  Eigen::VectorXd weight(head.loss.size());
  out.loss = reduce_loss(head, batch, kind, weight);
  out.per_sample = head.loss;
  if (!std::isfinite(out.loss)) throw NonFiniteLoss("batch loss is not finite");

  out.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.parameter_count()));
  Eigen::MatrixXd delta = head.dpre * weight.asDiagonal();
  std::size_t offset = out.gradient.size();
  for (std::size_t l = net.num_layers(); l-- > 0;) {
    const auto rows = static_cast<Eigen::Index>(net.widths()[l + 1]);
    const auto cols = static_cast<Eigen::Index>(net.widths()[l]);
    offset -= static_cast<std::size_t>(rows * cols + rows);
    Eigen::Map<Eigen::MatrixXd> gw(out.gradient.data() + offset, rows, cols);
    Eigen::Map<Eigen::VectorXd> gb(out.gradient.data() + offset + rows * cols, rows);
    gw.noalias() = delta * trace.inputs[l].transpose();
    gb = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd back = net.weight(l).transpose() * delta;
    if (net.activations()[l - 1] == Activation::relu) {
      back = back.cwiseProduct((trace.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
    delta = std::move(back);
  }
  if (!out.gradient.allFinite()) throw NonFiniteLoss("gradient is not finite");
  return out;
}

Eigen::VectorXd per_sample_losses(const DenseNet& net, const Batch& batch, const LossKind& kind) {
  check_batch(net, batch);
  check_head(net, kind);
  const auto pre = net.logits_batch(batch.inputs);
  auto h = head_terms(net, pre, batch, kind);
  if (!h.loss.allFinite()) throw NonFiniteLoss("per-sample loss is not finite");
  return std::move(h.loss);
}

AdamState::AdamState(std::size_t parameter_count, double lr)
    : m(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(parameter_count))),
      v(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(parameter_count))),
      learning_rate(lr) {
  if (!(lr > 0.0)) throw InvalidSize("learning rate must be positive");
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& s) {
  if (grad.size() != params.size() || s.m.size() != params.size() || s.v.size() != params.size()) {
    throw DimensionMismatch("optimizer buffers do not match the parameter vector");
  }
  ++s.step;
  s.m = s.beta1 * s.m + (1.0 - s.beta1) * grad;
  s.v = s.beta2 * s.v + (1.0 - s.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  const double step = s.learning_rate / c1;
  params.array() -= step * s.m.array() / ((s.v.array() / c2).sqrt() + s.epsilon);
}

void adam_step(DenseNet& net, const Eigen::VectorXd& grad, AdamState& state) {
  adam_step(net.parameters(), grad, state);
}

void sgd_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double eta) {
  if (grad.size() != params.size()) throw DimensionMismatch("gradient does not match the parameter vector");
  params.noalias() -= eta * grad;
}

void sgd_step(DenseNet& net, const Eigen::VectorXd& grad, double eta) { sgd_step(net.parameters(), grad, eta); }

}  // namespace l2m
