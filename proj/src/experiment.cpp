#include "learn2mix/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <regex>
#include <set>
#include <thread>

#include "learn2mix/csv.hpp"
#include "learn2mix/errors.hpp"

#ifndef L2M_GIT_HASH
#define L2M_GIT_HASH "unknown"
#endif

namespace l2m {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(Task t) {
  switch (t) {
    case Task::mean_estimation:
      return "mean-estimation";
    case Task::blobs:
      return "blobs";
    case Task::csv:
      return "csv";
  }
  return "unknown";
}

std::optional<Task> parse_task(std::string_view name) {
  if (name == "mean-estimation") return Task::mean_estimation;
  if (name == "blobs") return Task::blobs;
  if (name == "csv") return Task::csv;
  return std::nullopt;
}

std::string git_hash() { return L2M_GIT_HASH; }

fs::path default_output_root() {
  if (const char* env = std::getenv("L2M_OUTPUT_ROOT"); env && *env) return env;
  return "runs";
}

void RunSpec::validate() const {
  train.validate();
  if (strategies.empty()) throw UsageError("at least one strategy is required");
  if (seeds < 1) throw UsageError("seeds must be at least 1");
  if (jobs < 1) throw UsageError("jobs must be at least 1");
  if (hidden < 1) throw UsageError("hidden width must be at least 1");
  switch (task) {
    case Task::mean_estimation:
      if (train.loss != LossType::mse) throw UsageError("mean estimation is a regression task; use mse");
      break;
    case Task::blobs:
      if (train.loss != LossType::cross_entropy) throw UsageError("blobs is a classification task; use cross_entropy");
      if (blobs.counts.size() < 2) throw UsageError("blobs need at least two classes");
      break;
    case Task::csv:
      if (csv.train.empty()) throw UsageError("csv task needs a training file");
      if (csv.label_column.empty() && train.loss != LossType::cross_entropy) {
        throw UsageError("one-hot class labels need cross_entropy");
      }
      if (!csv.label_column.empty() && train.loss != LossType::mse) {
        throw UsageError("a numeric label column needs mse");
      }
      break;
  }
  for (auto s : strategies) {
    const bool classification_only = s == Strategy::focal || s == Strategy::smote || s == Strategy::curriculum;
    if (classification_only && train.loss != LossType::cross_entropy) {
      throw UsageError(std::string(to_string(s)) + " needs a classification task");
    }
  }
}

RunSpec default_spec(Task task) {
  RunSpec spec;
  spec.task = task;
  spec.train.optimizer = Optimizer::adam;
  switch (task) {
    case Task::mean_estimation:
      spec.train.loss = LossType::mse;
      spec.train.learning_rate = 5e-5;
      spec.train.mixing_rate = 0.01;
      spec.train.batch_size = 500;
      spec.train.epochs = 500;
      break;
    case Task::blobs:
      spec.train.loss = LossType::cross_entropy;
      spec.train.learning_rate = 1e-3;
      spec.train.mixing_rate = 0.05;
      spec.train.batch_size = 100;
      spec.train.epochs = 50;
      break;
    case Task::csv:
      spec.train.loss = LossType::cross_entropy;
      spec.train.learning_rate = 1e-4;
      spec.train.mixing_rate = 0.05;
      spec.train.batch_size = 100;
      spec.train.epochs = 100;
      break;
  }
  spec.output_dir = default_output_root();
  return spec;
}

json to_json(const RunSpec& spec) {
  json strategies = json::array();
  for (auto s : spec.strategies) strategies.push_back(std::string(to_string(s)));
  const auto& t = spec.train;
  return json{
      {"task", std::string(to_string(spec.task))},
      {"strategies", strategies},
      {"seeds", spec.seeds},
      {"base_seed", spec.base_seed},
      {"jobs", spec.jobs},
      {"hidden", spec.hidden},
      {"output_dir", spec.output_dir.string()},
      {"train",
       {{"epochs", t.epochs},
        {"batch_size", t.batch_size},
        {"learning_rate", t.learning_rate},
        {"mixing_rate", t.mixing_rate},
        {"loss", std::string(to_string(t.loss))},
        {"optimizer", std::string(to_string(t.optimizer))},
        {"eval_every", t.eval_every},
        {"step_per_epoch", t.step_per_epoch},
        {"focal_gamma", t.focal_gamma},
        {"smote_neighbors", t.smote_neighbors},
        {"record_time", t.record_time}}},
      {"mean_estimation",
       {{"sizes", spec.mean_estimation.sizes},
        {"test_per_class", spec.mean_estimation.test_per_class},
        {"dim", spec.mean_estimation.dim},
        {"uniform_half_width", spec.mean_estimation.uniform_half_width}}},
      {"blobs",
       {{"counts", spec.blobs.counts},
        {"test_per_class", spec.blobs.test_per_class},
        {"dim", spec.blobs.dim},
        {"separation", spec.blobs.separation}}},
      {"csv",
       {{"train", spec.csv.train.string()},
        {"test", spec.csv.test.string()},
        {"label_column", spec.csv.label_column},
        {"class_column", spec.csv.class_column},
        {"delimiter", std::string(1, spec.csv.delimiter)}}},
  };
}

namespace {

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) throw UsageError(std::string(where) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw UsageError("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

RunSpec apply_json(const json& input, RunSpec spec) {
  const json& j = input.contains("config") && input.contains("git_hash") ? input.at("config") : input;
  check_keys(j, {"task", "strategies", "seeds", "base_seed", "jobs", "hidden", "output_dir", "train", "mean_estimation",
                 "blobs", "csv"},
             "config");
  if (j.contains("task")) {
    const auto name = j.at("task").get<std::string>();
    const auto task = parse_task(name);
    if (!task) throw UsageError("unknown task '" + name + "'");
    spec.task = *task;
  }
  if (j.contains("strategies")) {
    spec.strategies.clear();
    for (const auto& s : j.at("strategies")) {
      const auto name = s.get<std::string>();
      const auto strategy = parse_strategy(name);
      if (!strategy) throw UsageError("unknown strategy '" + name + "'");
      spec.strategies.push_back(*strategy);
    }
  }
  read(j, "seeds", spec.seeds);
  read(j, "base_seed", spec.base_seed);
  read(j, "jobs", spec.jobs);
  read(j, "hidden", spec.hidden);
  if (j.contains("output_dir")) spec.output_dir = j.at("output_dir").get<std::string>();

  if (j.contains("train")) {
    const auto& t = j.at("train");
    check_keys(t, {"epochs", "batch_size", "learning_rate", "mixing_rate", "loss", "optimizer", "eval_every",
                   "step_per_epoch", "focal_gamma", "smote_neighbors", "record_time"},
               "train");
    auto& c = spec.train;
    read(t, "epochs", c.epochs);
    read(t, "batch_size", c.batch_size);
    read(t, "learning_rate", c.learning_rate);
    read(t, "mixing_rate", c.mixing_rate);
    read(t, "eval_every", c.eval_every);
    read(t, "step_per_epoch", c.step_per_epoch);
    read(t, "focal_gamma", c.focal_gamma);
    read(t, "smote_neighbors", c.smote_neighbors);
    read(t, "record_time", c.record_time);
    if (t.contains("loss")) {
      const auto name = t.at("loss").get<std::string>();
      const auto loss = parse_loss(name);
      if (!loss) throw UsageError("unknown loss '" + name + "'");
      c.loss = *loss;
    }
    if (t.contains("optimizer")) {
      const auto name = t.at("optimizer").get<std::string>();
      const auto opt = parse_optimizer(name);
      if (!opt) throw UsageError("unknown optimizer '" + name + "'");
      c.optimizer = *opt;
    }
  }
  if (j.contains("mean_estimation")) {
    const auto& m = j.at("mean_estimation");
    check_keys(m, {"sizes", "test_per_class", "dim", "uniform_half_width"}, "mean_estimation");
    read(m, "sizes", spec.mean_estimation.sizes);
    read(m, "test_per_class", spec.mean_estimation.test_per_class);
    read(m, "dim", spec.mean_estimation.dim);
    read(m, "uniform_half_width", spec.mean_estimation.uniform_half_width);
  }
  if (j.contains("blobs")) {
    const auto& b = j.at("blobs");
    check_keys(b, {"counts", "test_per_class", "dim", "separation"}, "blobs");
    read(b, "counts", spec.blobs.counts);
    read(b, "test_per_class", spec.blobs.test_per_class);
    read(b, "dim", spec.blobs.dim);
    read(b, "separation", spec.blobs.separation);
  }
  if (j.contains("csv")) {
    const auto& c = j.at("csv");
    check_keys(c, {"train", "test", "label_column", "class_column", "delimiter"}, "csv");
    if (c.contains("train")) spec.csv.train = c.at("train").get<std::string>();
    if (c.contains("test")) spec.csv.test = c.at("test").get<std::string>();
    read(c, "label_column", spec.csv.label_column);
    read(c, "class_column", spec.csv.class_column);
    if (c.contains("delimiter")) {
      const auto d = c.at("delimiter").get<std::string>();
      if (d.size() != 1) throw UsageError("csv delimiter must be a single character");
      spec.csv.delimiter = d[0];
    }
  }
  return spec;
}

RunSpec load_spec(const fs::path& path, RunSpec base) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UsageError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return apply_json(j, std::move(base));
}

Datasets make_datasets(const RunSpec& spec, std::uint64_t seed) {
  switch (spec.task) {
    case Task::mean_estimation: {
      auto [train, test] = make_mean_estimation(seed, spec.mean_estimation);
      return {std::move(train), std::move(test)};
    }
    case Task::blobs: {
      const auto k = spec.blobs.counts.size();
      const std::vector<std::size_t> test_counts(k, spec.blobs.test_per_class);
      return {make_gaussian_blobs(seed, k, spec.blobs.counts, spec.blobs.dim, spec.blobs.separation),
              make_gaussian_blobs(seed, k, test_counts, spec.blobs.dim, spec.blobs.separation,
                                  StreamTag::dataset_test)};
    }
    case Task::csv: {
      CsvSchema schema;
      schema.delimiter = spec.csv.delimiter;
      schema.class_values = read_class_values(spec.csv.train, spec.csv.class_column, schema);
      Datasets d{load_csv(spec.csv.train, spec.csv.label_column, spec.csv.class_column, schema), std::nullopt};
      if (!spec.csv.test.empty()) d.test = load_csv(spec.csv.test, spec.csv.label_column, spec.csv.class_column, schema);
      return d;
    }
  }
  throw UsageError("unknown task");
}

DenseNet make_network(const RunSpec& spec, const ClassPartitionedDataset& train, std::uint64_t seed) {
  const auto last = spec.train.loss == LossType::cross_entropy ? Activation::softmax : Activation::identity;
  DenseNet net({train.feature_dim(), spec.hidden, train.label_dim()}, {Activation::relu, last});
  net.init_uniform(seed);
  return net;
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string(); }

}  // namespace

void write_metrics_csv(const std::vector<EpochMetrics>& history, std::size_t num_classes, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "epoch,elapsed_s,train_loss,test_loss,accuracy,worst_class_acc";
  for (std::size_t i = 0; i < num_classes; ++i) out << ",loss_c" << i;
  for (std::size_t i = 0; i < num_classes; ++i) out << ",alpha_" << i;
  out << '\n';
  for (const auto& m : history) {
    out << m.epoch << ',' << cell(m.elapsed_s) << ',' << csv::format_double(m.train_loss) << ',' << cell(m.test_loss)
        << ',' << cell(m.accuracy) << ',' << cell(m.worst_class_accuracy);
    for (std::size_t i = 0; i < num_classes; ++i) {
      out << ',' << (i < m.class_losses.size() ? csv::format_double(m.class_losses[i]) : std::string());
    }
    for (std::size_t i = 0; i < num_classes; ++i) {
      out << ',' << (i < m.alpha.size() ? csv::format_double(m.alpha[i]) : std::string());
    }
    out << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
}

std::string metrics_filename(Strategy s, std::uint64_t seed) {
  return std::string(to_string(s)) + "_seed" + std::to_string(seed) + ".csv";
}

RunOutcome run_cell(const RunSpec& spec, Strategy strategy, std::uint64_t seed) {
  const auto data = make_datasets(spec, seed);
  auto cfg = spec.train;
  cfg.strategy = strategy;
  cfg.seed = seed;
  auto result = train(data.train, data.test ? &*data.test : nullptr, make_network(spec, data.train, seed), cfg);

  fs::create_directories(spec.output_dir);
  RunOutcome outcome{strategy, seed, spec.output_dir / metrics_filename(strategy, seed), {}, {}};
  outcome.manifest = outcome.metrics;
  outcome.manifest.replace_extension(".json");
  outcome.checkpoint = outcome.metrics;
  outcome.checkpoint.replace_extension(".ckpt");
  write_metrics_csv(result.history, data.train.num_classes(), outcome.metrics);
  const auto code = strategy == Strategy::focal                ? LossCode::focal
                    : spec.train.loss == LossType::cross_entropy ? LossCode::cross_entropy
                                                                 : LossCode::mse;
  save_checkpoint({std::move(result.net), code}, outcome.checkpoint);

  RunSpec echo = spec;
  echo.strategies = {strategy};
  echo.seeds = 1;
  echo.base_seed = seed;
  echo.jobs = 1;
  const json manifest{{"config", to_json(echo)},
                      {"strategy", std::string(to_string(strategy))},
                      {"seed", seed},
                      {"git_hash", git_hash()},
                      {"metrics_file", outcome.metrics.filename().string()},
                      {"checkpoint_file", outcome.checkpoint.filename().string()}};
  std::ofstream out(outcome.manifest);
  out << manifest.dump(2) << '\n';
  if (!out) throw Error("write failed for " + outcome.manifest.string());
  return outcome;
}

std::vector<RunOutcome> run(const RunSpec& spec) {
  spec.validate();
  fs::create_directories(spec.output_dir);
  std::vector<std::pair<Strategy, std::uint64_t>> grid;
  for (auto s : spec.strategies) {
    for (std::size_t r = 0; r < spec.seeds; ++r) grid.emplace_back(s, spec.base_seed + r);
  }
  std::vector<RunOutcome> outcomes(grid.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      try {
        outcomes[i] = run_cell(spec, grid[i].first, grid[i].second);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const auto workers = std::min(spec.jobs, grid.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  std::vector<fs::path> files;
  for (const auto& o : outcomes) files.push_back(o.metrics);
  write_summary(summarize(files, spec.train.epochs), spec.output_dir / "summary.csv");
  return outcomes;
}

std::vector<std::size_t> summary_epochs(std::size_t epochs) {
  std::vector<std::size_t> out;
  for (double f : {0.25, 0.5, 1.0}) {
    const auto e = static_cast<std::size_t>(std::max<long long>(1, std::llround(f * static_cast<double>(epochs))));
    if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(e);
  }
  return out;
}

std::string strategy_of(const fs::path& metrics_file) {
  static const std::regex pattern(R"(^(.+)_seed(\d+)\.csv$)");
  const auto name = metrics_file.filename().string();
  std::smatch m;
  if (!std::regex_match(name, m, pattern)) return {};
  return m[1].str();
}

std::vector<fs::path> find_metrics_files(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) throw Error(dir.string() + " is not a directory");
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && !strategy_of(entry.path()).empty()) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<SummaryRow> summarize(const std::vector<fs::path>& metrics_files, std::size_t epochs) {
  static const std::vector<std::string> metrics{"test_loss", "accuracy", "worst_class_acc"};
  // strategy -> metric -> epoch -> values
  std::map<std::string, std::map<std::string, std::map<std::size_t, std::vector<double>>>> values;
  std::vector<std::string> order;
  std::vector<csv::Table> tables;
  std::size_t max_epoch = 0;
  for (const auto& file : metrics_files) {
    auto name = strategy_of(file);
    if (name.empty()) name = file.stem().string();
    if (std::find(order.begin(), order.end(), name) == order.end()) order.push_back(name);
    tables.push_back(csv::read(file));
    const auto& t = tables.back();
    const auto ec = t.column("epoch");
    for (const auto& r : t.rows) {
      const auto e = csv::parse_double(r.fields[ec]);
      if (!e) throw ParseError(r.line, "epoch is not a number in " + file.string());
      max_epoch = std::max(max_epoch, static_cast<std::size_t>(*e));
    }
  }
  const auto checkpoints = summary_epochs(epochs ? epochs : max_epoch);
  for (std::size_t f = 0; f < metrics_files.size(); ++f) {
    auto name = strategy_of(metrics_files[f]);
    if (name.empty()) name = metrics_files[f].stem().string();
    const auto& t = tables[f];
    const auto ec = t.column("epoch");
    for (const auto& metric : metrics) {
      const auto mc = t.column(metric);
      for (const auto& r : t.rows) {
        const auto e = static_cast<std::size_t>(*csv::parse_double(r.fields[ec]));
        if (std::find(checkpoints.begin(), checkpoints.end(), e) == checkpoints.end()) continue;
        if (const auto v = csv::parse_double(r.fields[mc])) values[name][metric][e].push_back(*v);
      }
    }
  }
  std::vector<SummaryRow> rows;
  for (const auto& name : order) {
    for (const auto& metric : metrics) {
      for (auto e : checkpoints) {
        const auto& v = values[name][metric][e];
        if (v.empty()) continue;
        SummaryRow row{name, metric, e, v.size(), 0.0, std::nullopt};
        for (double x : v) row.mean += x;
        row.mean /= static_cast<double>(v.size());
        if (v.size() > 1) {
          double ss = 0.0;
          for (double x : v) ss += (x - row.mean) * (x - row.mean);
          row.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

void write_summary(const std::vector<SummaryRow>& rows, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "strategy,metric,epoch,n,mean,std\n";
  for (const auto& r : rows) {
    out << r.strategy << ',' << r.metric << ',' << r.epoch << ',' << r.count << ',' << csv::format_double(r.mean) << ','
        << (r.stddev ? csv::format_double(*r.stddev) : std::string()) << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
}

json to_json(const TheoryReport& r) {
  json step_comparison = {{"draws", r.step_comparison.draws},
                {"step_no_worse", r.step_comparison.step_no_worse},
                {"hold_fraction", r.step_comparison.hold_fraction},
                {"condition_holds", r.step_comparison.condition_holds},
                {"condition_and_step_no_worse", r.step_comparison.both},
                {"beta_computed", r.step_comparison.beta_computed},
                {"condition_scalarization", "sum of class loss gaps"}};
  return json{
      {"passed", r.passed()},
      {"convergence",
       {{"eta", r.eta},
        {"gamma", r.gamma},
        {"steps", r.convergence.steps},
        {"rho", r.convergence.rho},
        {"initial_distance", r.convergence.initial_distance},
        {"final_distance", r.convergence.final_distance},
        {"final_alpha_error", r.convergence.final_alpha_error},
        {"final_alpha", r.convergence.final_alpha},
        {"envelope_violations", r.convergence.envelope_violations},
        {"gradient_bound_violations", r.convergence.gradient_bound_violations},
        {"alpha_contraction_violations", r.convergence.alpha_contraction_violations},
        {"simplex_violations", r.convergence.simplex_violations},
        {"seconds", r.convergence_seconds}}},
      {"gradient_bounds",
       {{"draws", r.gradient_bounds.draws},
        {"violations", r.gradient_bounds.violations},
        {"min_lower_margin", r.gradient_bounds.min_lower_margin},
        {"min_upper_margin", r.gradient_bounds.min_upper_margin},
        {"seconds", r.gradient_bounds_seconds}}},
      {"zero_gamma",
       {{"instances", r.zero_gamma.instances},
        {"max_relative_difference", r.zero_gamma.max_relative_difference}}},
      {"step_comparison", step_comparison},
  };
}

}  // namespace l2m
