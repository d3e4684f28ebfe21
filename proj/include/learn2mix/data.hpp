#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "learn2mix/random.hpp"

namespace l2m {

struct Sample {
  Eigen::VectorXd features;
  Eigen::VectorXd label;  // regression target or one-hot class indicator
  std::size_t class_id = 0;
};

/// A training set split into one store per class, with the fixed class
/// proportions |J_i| / N. Immutable after construction.
class ClassPartitionedDataset {
 public:
  ClassPartitionedDataset() = default;

  /// Takes ownership of per-class stores; store i must only hold class i.
  /// Throws EmptyClass, DimensionMismatch, or InvalidSize on bad input.
  explicit ClassPartitionedDataset(std::vector<std::vector<Sample>> stores);

  std::size_t num_classes() const noexcept { return stores_.size(); }
  std::size_t size() const noexcept { return total_; }
  std::size_t feature_dim() const noexcept { return feature_dim_; }
  std::size_t label_dim() const noexcept { return label_dim_; }

  std::span<const Sample> store(std::size_t class_id) const { return stores_.at(class_id); }
  const Sample& at(std::size_t class_id, std::size_t index) const { return stores_.at(class_id).at(index); }

  const std::vector<double>& fixed_proportions() const noexcept { return proportions_; }
  std::vector<std::size_t> class_sizes() const;

  /// All samples, class-major.
  std::vector<Sample> flatten() const;

  bool operator==(const ClassPartitionedDataset& other) const;

 private:
  std::vector<std::vector<Sample>> stores_;
  std::vector<double> proportions_;
  std::size_t total_ = 0;
  std::size_t feature_dim_ = 0;
  std::size_t label_dim_ = 0;
};

ClassPartitionedDataset partition_by_class(std::vector<Sample> samples, std::size_t num_classes);

struct MeanEstimationOptions {
  std::vector<std::size_t> sizes{1000, 1000, 800, 200};
  std::size_t test_per_class = 1000;
  std::size_t dim = 10;
  // The uniform class draws from [mu - w, mu + w].
  double uniform_half_width = 10.0;
};

/// Four-class mean regression task: normal, exponential, chi-squared, and
/// uniform draws whose mean is the label. Returns (imbalanced train, balanced test).
std::pair<ClassPartitionedDataset, ClassPartitionedDataset> make_mean_estimation(
    std::uint64_t seed, const MeanEstimationOptions& options = {});

/// Isotropic unit-variance blobs centred at separation * e_(i mod dim), one-hot labels.
/// Pass StreamTag::dataset_test to draw a test split independent of the training split.
ClassPartitionedDataset make_gaussian_blobs(std::uint64_t seed, std::size_t num_classes,
                                            std::span<const std::size_t> per_class_counts, std::size_t dim,
                                            double separation, StreamTag stream = StreamTag::dataset_train);

struct ImbalanceSpec {
  enum class Kind { linear, logarithmic, per_class_factor };

  Kind kind = Kind::per_class_factor;
  std::vector<double> factors;  // per_class_factor only

  static ImbalanceSpec linear() { return {Kind::linear, {}}; }
  static ImbalanceSpec logarithmic() { return {Kind::logarithmic, {}}; }
  static ImbalanceSpec per_class(std::vector<double> f) { return {Kind::per_class_factor, std::move(f)}; }

  /// Retention fractions for k classes. Linear gives 1 - 0.1 i and logarithmic 40^(-i/k), i = 1..k.
  std::vector<double> retention(std::size_t num_classes) const;
};

/// Keeps max(1, round(eps_i |J_i|)) uniformly chosen samples of each class,
/// in their original order.
ClassPartitionedDataset apply_imbalance(const ClassPartitionedDataset& ds, const ImbalanceSpec& spec,
                                        std::uint64_t seed);

struct CsvSchema {
  char delimiter = ',';
  /// Empty means every column except the label and class columns.
  std::vector<std::string> feature_columns;
  /// Class values in id order. Empty means the sorted distinct values found in the file.
  std::vector<std::string> class_values;
};

/// Sorted distinct values of class_column (numerically when every value is a number).
std::vector<std::string> read_class_values(const std::filesystem::path& path, const std::string& class_column,
                                           const CsvSchema& schema = {});

/// Reads a headed CSV. Classes default to read_class_values order.
/// An empty label_column produces one-hot class labels.
ClassPartitionedDataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                                 const std::string& class_column, const CsvSchema& schema = {});

/// Writes f0..f{d-1}, label (label0.. when multi-dimensional), class.
void write_csv(const ClassPartitionedDataset& ds, const std::filesystem::path& path);

}  // namespace l2m
