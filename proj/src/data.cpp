#include "learn2mix/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "learn2mix/errors.hpp"
#include "learn2mix/random.hpp"

namespace l2m {

namespace {

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

ClassPartitionedDataset::ClassPartitionedDataset(std::vector<std::vector<Sample>> stores)
    : stores_(std::move(stores)) {
  if (stores_.empty()) throw InvalidSize("dataset needs at least one class");
  bool first = true;
  for (std::size_t i = 0; i < stores_.size(); ++i) {
    if (stores_[i].empty()) throw EmptyClass(i);
    for (const auto& s : stores_[i]) {
      if (s.class_id != i) throw InvalidSize("sample with class " + std::to_string(s.class_id) + " in store " + std::to_string(i));
      if (first) {
        feature_dim_ = static_cast<std::size_t>(s.features.size());
        label_dim_ = static_cast<std::size_t>(s.label.size());
        first = false;
      } else if (static_cast<std::size_t>(s.features.size()) != feature_dim_ ||
                 static_cast<std::size_t>(s.label.size()) != label_dim_) {
        throw DimensionMismatch("inconsistent feature or label dimension in class " + std::to_string(i));
      }
      if (!all_finite(s.features) || !all_finite(s.label)) {
        throw InvalidSize("non-finite sample in class " + std::to_string(i));
      }
    }
    total_ += stores_[i].size();
  }
  proportions_.reserve(stores_.size());
  for (const auto& st : stores_) {
    proportions_.push_back(static_cast<double>(st.size()) / static_cast<double>(total_));
  }
}

std::vector<std::size_t> ClassPartitionedDataset::class_sizes() const {
  std::vector<std::size_t> out;
  out.reserve(stores_.size());
  for (const auto& st : stores_) out.push_back(st.size());
  return out;
}

std::vector<Sample> ClassPartitionedDataset::flatten() const {
  std::vector<Sample> out;
  out.reserve(total_);
  for (const auto& st : stores_) out.insert(out.end(), st.begin(), st.end());
  return out;
}

bool ClassPartitionedDataset::operator==(const ClassPartitionedDataset& other) const {
  if (stores_.size() != other.stores_.size()) return false;
  for (std::size_t i = 0; i < stores_.size(); ++i) {
    const auto& a = stores_[i];
    const auto& b = other.stores_[i];
    if (a.size() != b.size()) return false;
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (a[j].class_id != b[j].class_id || a[j].features.size() != b[j].features.size() ||
          a[j].label.size() != b[j].label.size() || a[j].features != b[j].features || a[j].label != b[j].label) {
        return false;
      }
    }
  }
  return true;
}

ClassPartitionedDataset partition_by_class(std::vector<Sample> samples, std::size_t num_classes) {
  if (num_classes == 0) throw InvalidSize("number of classes must be positive");
  std::vector<std::vector<Sample>> stores(num_classes);
  for (auto& s : samples) {
    if (s.class_id >= num_classes) {
      throw InvalidSize("class id " + std::to_string(s.class_id) + " out of range for k=" + std::to_string(num_classes));
    }
    stores[s.class_id].push_back(std::move(s));
  }
  for (std::size_t i = 0; i < num_classes; ++i) {
    if (stores[i].empty()) throw EmptyClass(i);
  }
  return ClassPartitionedDataset(std::move(stores));
}

namespace {

// mu in (0, 1]; the exponential and gamma draws need a strictly positive mean.
double unit_mean(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return 1.0 - u(rng);
}

Sample mean_estimation_sample(std::size_t class_id, Rng& rng, const MeanEstimationOptions& opt) {
  const auto dim = static_cast<Eigen::Index>(opt.dim);
  Eigen::VectorXd x(dim);
  double mu = 0.0;
  switch (class_id) {
    case 0: {
      mu = unit_mean(rng);
      std::normal_distribution<double> d(mu, 1.0);
      for (Eigen::Index j = 0; j < dim; ++j) x[j] = d(rng);
      break;
    }
    case 1: {
      mu = unit_mean(rng);
      std::exponential_distribution<double> d(1.0 / mu);
      for (Eigen::Index j = 0; j < dim; ++j) x[j] = d(rng);
      break;
    }
    case 2: {
      // Chi-squared with fractional degrees of freedom mu, i.e. Gamma(mu/2, 2).
      mu = unit_mean(rng);
      std::gamma_distribution<double> d(mu / 2.0, 2.0);
      for (Eigen::Index j = 0; j < dim; ++j) x[j] = d(rng);
      break;
    }
    default: {
      std::uniform_real_distribution<double> m(20.0, 50.0);
      mu = m(rng);
      std::uniform_real_distribution<double> d(mu - opt.uniform_half_width, mu + opt.uniform_half_width);
      for (Eigen::Index j = 0; j < dim; ++j) x[j] = d(rng);
      break;
    }
  }
  Sample s;
  s.features = std::move(x);
  s.label = Eigen::VectorXd::Constant(1, mu);
  s.class_id = class_id;
  return s;
}

ClassPartitionedDataset mean_estimation_split(std::uint64_t seed, StreamTag tag, std::span<const std::size_t> sizes,
                                              const MeanEstimationOptions& opt) {
  std::vector<std::vector<Sample>> stores(sizes.size());
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    auto rng = make_stream(seed, tag, {c});
    stores[c].reserve(sizes[c]);
    for (std::size_t j = 0; j < sizes[c]; ++j) stores[c].push_back(mean_estimation_sample(c, rng, opt));
  }
  return ClassPartitionedDataset(std::move(stores));
}

}  // namespace

std::pair<ClassPartitionedDataset, ClassPartitionedDataset> make_mean_estimation(std::uint64_t seed,
                                                                                 const MeanEstimationOptions& options) {
  if (options.sizes.size() != 4) throw InvalidSize("mean estimation has exactly four classes");
  for (auto s : options.sizes) {
    if (s < 1) throw InvalidSize("class sizes must be at least 1");
  }
  if (options.test_per_class < 1) throw InvalidSize("test_per_class must be at least 1");
  if (options.dim < 1) throw InvalidSize("feature dimension must be at least 1");
  if (!(options.uniform_half_width >= 0.0)) throw InvalidSize("uniform half width must be nonnegative");

  const std::vector<std::size_t> test_sizes(4, options.test_per_class);
  return {mean_estimation_split(seed, StreamTag::dataset_train, options.sizes, options),
          mean_estimation_split(seed, StreamTag::dataset_test, test_sizes, options)};
}

ClassPartitionedDataset make_gaussian_blobs(std::uint64_t seed, std::size_t num_classes,
                                            std::span<const std::size_t> per_class_counts, std::size_t dim,
                                            double separation, StreamTag stream) {
  if (num_classes < 2) throw InvalidSize("blobs need at least two classes");
  if (per_class_counts.size() != num_classes) throw InvalidSize("one count per class required");
  if (dim < 1) throw InvalidSize("dimension must be at least 1");
  if (!(separation >= 0.0) || !std::isfinite(separation)) throw InvalidSize("separation must be finite and >= 0");

  std::vector<std::vector<Sample>> stores(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (per_class_counts[c] < 1) throw InvalidSize("class counts must be at least 1");
    auto rng = make_stream(seed, stream, {c});
    std::normal_distribution<double> noise(0.0, 1.0);
    Eigen::VectorXd center = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    center[static_cast<Eigen::Index>(c % dim)] = separation;
    Eigen::VectorXd onehot = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_classes));
    onehot[static_cast<Eigen::Index>(c)] = 1.0;
    stores[c].reserve(per_class_counts[c]);
    for (std::size_t j = 0; j < per_class_counts[c]; ++j) {
      Sample s;
      s.features = center;
      for (Eigen::Index t = 0; t < s.features.size(); ++t) s.features[t] += noise(rng);
      s.label = onehot;
      s.class_id = c;
      stores[c].push_back(std::move(s));
    }
  }
  return ClassPartitionedDataset(std::move(stores));
}

std::vector<double> ImbalanceSpec::retention(std::size_t num_classes) const {
  std::vector<double> eps(num_classes);
  switch (kind) {
    case Kind::linear:
      for (std::size_t i = 0; i < num_classes; ++i) eps[i] = 1.0 - 0.1 * static_cast<double>(i + 1);
      break;
    case Kind::logarithmic:
      for (std::size_t i = 0; i < num_classes; ++i) {
        eps[i] = std::pow(40.0, -static_cast<double>(i + 1) / static_cast<double>(num_classes));
      }
      break;
    case Kind::per_class_factor:
      if (factors.size() != num_classes) throw InvalidSize("one retention factor per class required");
      eps = factors;
      break;
  }
  for (double e : eps) {
    if (!std::isfinite(e) || e > 1.0) throw InvalidSize("retention factors must be finite and <= 1");
  }
  return eps;
}

ClassPartitionedDataset apply_imbalance(const ClassPartitionedDataset& ds, const ImbalanceSpec& spec,
                                        std::uint64_t seed) {
  const auto eps = spec.retention(ds.num_classes());
  std::vector<std::vector<Sample>> stores(ds.num_classes());
  for (std::size_t c = 0; c < ds.num_classes(); ++c) {
    const auto store = ds.store(c);
    const auto n = store.size();
    const auto wanted = std::llround(std::max(0.0, eps[c]) * static_cast<double>(n));
    const auto keep = static_cast<std::size_t>(std::clamp<long long>(wanted, 1, static_cast<long long>(n)));

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (keep < n) {
      auto rng = make_stream(seed, StreamTag::imbalance, {c});
      // Partial Fisher-Yates: the first `keep` entries are a uniform subset.
      for (std::size_t i = 0; i < keep; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
      }
      idx.resize(keep);
      std::sort(idx.begin(), idx.end());
    }
    stores[c].reserve(idx.size());
    for (auto j : idx) stores[c].push_back(store[j]);
  }
  return ClassPartitionedDataset(std::move(stores));
}

}  // namespace l2m
