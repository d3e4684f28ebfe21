#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "learn2mix/data.hpp"
#include "learn2mix/theory.hpp"
#include "learn2mix/train.hpp"

namespace l2m {

enum class Task { mean_estimation, blobs, csv };

std::string_view to_string(Task t);
std::optional<Task> parse_task(std::string_view name);

struct BlobsOptions {
  std::vector<std::size_t> counts{900, 90, 10};
  std::size_t test_per_class = 300;
  std::size_t dim = 3;
  double separation = 2.0;
};

struct CsvOptions {
  std::filesystem::path train;
  std::filesystem::path test;  // empty: no test evaluation
  std::string label_column;    // empty: one-hot class labels
  std::string class_column = "class";
  char delimiter = ',';
};

/// One strategy x seed grid. Seed r of the grid uses base_seed + r for data
/// generation, initialization, and training alike.
struct RunSpec {
  Task task = Task::mean_estimation;
  MeanEstimationOptions mean_estimation;
  BlobsOptions blobs;
  CsvOptions csv;
  std::vector<Strategy> strategies{Strategy::learn2mix};
  TrainConfig train;
  std::size_t hidden = 64;
  std::size_t seeds = 1;
  std::uint64_t base_seed = 0;
  std::size_t jobs = 1;
  std::filesystem::path output_dir;

  /// Throws UsageError.
  void validate() const;
};

/// Task defaults: the table settings for mean estimation (Adam, eta 5e-5,
/// gamma 0.01, M 500, E 500) and a small imbalanced setup for blobs.
RunSpec default_spec(Task task);

nlohmann::json to_json(const RunSpec& spec);
/// Overlays the keys present in j onto base. Accepts a run manifest, whose
/// "config" member is used. Throws UsageError on unknown values.
RunSpec apply_json(const nlohmann::json& j, RunSpec base);
RunSpec load_spec(const std::filesystem::path& path, RunSpec base);

struct Datasets {
  ClassPartitionedDataset train;
  std::optional<ClassPartitionedDataset> test;
};

Datasets make_datasets(const RunSpec& spec, std::uint64_t seed);
DenseNet make_network(const RunSpec& spec, const ClassPartitionedDataset& train, std::uint64_t seed);

/// Header: epoch,elapsed_s,train_loss,test_loss,accuracy,worst_class_acc,loss_c0..,alpha_0..
void write_metrics_csv(const std::vector<EpochMetrics>& history, std::size_t num_classes,
                       const std::filesystem::path& path);

std::string metrics_filename(Strategy s, std::uint64_t seed);

struct RunOutcome {
  Strategy strategy = Strategy::learn2mix;
  std::uint64_t seed = 0;
  std::filesystem::path metrics;
  std::filesystem::path manifest;
  std::filesystem::path checkpoint;
};

/// Trains one grid cell and writes its metrics CSV, manifest, and final
/// checkpoint (<strategy>_seed<S>.ckpt) into spec.output_dir.
RunOutcome run_cell(const RunSpec& spec, Strategy strategy, std::uint64_t seed);

/// Runs the whole grid on spec.jobs worker threads and writes summary.csv.
std::vector<RunOutcome> run(const RunSpec& spec);

struct SummaryRow {
  std::string strategy;
  std::string metric;
  std::size_t epoch = 0;
  std::size_t count = 0;
  double mean = 0.0;
  std::optional<double> stddev;  // sample standard deviation, needs two runs
};

/// Checkpoint epochs llround(0.25 E), llround(0.5 E), E (at least 1, deduplicated).
std::vector<std::size_t> summary_epochs(std::size_t epochs);

/// Mean and sample std of test_loss, accuracy, and worst_class_acc at the
/// checkpoint epochs, grouped by the strategy prefix of each `<strategy>_seed<S>.csv`.
std::vector<SummaryRow> summarize(const std::vector<std::filesystem::path>& metrics_files, std::size_t epochs);
void write_summary(const std::vector<SummaryRow>& rows, const std::filesystem::path& path);

/// Metrics files in dir matching <strategy>_seed<S>.csv, sorted by name.
std::vector<std::filesystem::path> find_metrics_files(const std::filesystem::path& dir);

/// Strategy prefix of a metrics filename; empty when the name does not match.
std::string strategy_of(const std::filesystem::path& metrics_file);

nlohmann::json to_json(const TheoryReport& report);

/// Directory from L2M_OUTPUT_ROOT, else "runs".
std::filesystem::path default_output_root();

std::string git_hash();

}  // namespace l2m
