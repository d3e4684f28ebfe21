#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "learn2mix/csv.hpp"
#include "learn2mix/errors.hpp"
#include "learn2mix/experiment.hpp"
#include "learn2mix/plot.hpp"

namespace fs = std::filesystem;
using namespace l2m;

namespace {

constexpr int kOk = 0, kFailure = 1, kUsage = 2;

struct TrainFlags {
  std::optional<std::string> task;
  std::optional<std::string> config;
  std::vector<std::string> strategies;
  std::optional<std::size_t> seeds, base_seed, jobs, epochs, batch_size, eval_every, hidden, smote_neighbors;
  std::optional<double> learning_rate, mixing_rate, focal_gamma;
  std::optional<std::string> loss, optimizer, out;
  std::optional<std::string> train_csv, test_csv, label_column, class_column;
  bool no_time = false;
  bool step_per_epoch = false;
};

Task require_task(const std::string& name) {
  const auto t = parse_task(name);
  if (!t) throw UsageError("unknown task '" + name + "'");
  return *t;
}

RunSpec build_spec(const TrainFlags& f) {
  nlohmann::json config = nlohmann::json::object();
  if (f.config) {
    std::ifstream in(*f.config);
    if (!in) throw UsageError("cannot open config " + *f.config);
    try {
      in >> config;
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("config " + *f.config + " is not valid JSON: " + e.what());
    }
  }
  const auto& body = config.contains("config") ? config.at("config") : config;
  Task task = Task::mean_estimation;
  if (f.task) {
    task = require_task(*f.task);
  } else if (body.contains("task")) {
    task = require_task(body.at("task").get<std::string>());
  }
  RunSpec spec = apply_json(config, default_spec(task));
  spec.task = task;

  if (!f.strategies.empty()) {
    spec.strategies.clear();
    for (const auto& name : f.strategies) {
      const auto s = parse_strategy(name);
      if (!s) throw UsageError("unknown strategy '" + name + "'");
      spec.strategies.push_back(*s);
    }
  }
  if (f.seeds) spec.seeds = *f.seeds;
  if (f.base_seed) spec.base_seed = *f.base_seed;
  if (f.jobs) spec.jobs = *f.jobs;
  if (f.hidden) spec.hidden = *f.hidden;
  if (f.out) spec.output_dir = *f.out;
  auto& t = spec.train;
  if (f.epochs) t.epochs = *f.epochs;
  if (f.batch_size) t.batch_size = *f.batch_size;
  if (f.eval_every) t.eval_every = *f.eval_every;
  if (f.smote_neighbors) t.smote_neighbors = *f.smote_neighbors;
  if (f.learning_rate) t.learning_rate = *f.learning_rate;
  if (f.mixing_rate) t.mixing_rate = *f.mixing_rate;
  if (f.focal_gamma) t.focal_gamma = *f.focal_gamma;
  if (f.no_time) t.record_time = false;
  if (f.step_per_epoch) t.step_per_epoch = true;
  if (f.loss) {
    const auto l = parse_loss(*f.loss);
    if (!l) throw UsageError("unknown loss '" + *f.loss + "'");
    t.loss = *l;
  }
  if (f.optimizer) {
    const auto o = parse_optimizer(*f.optimizer);
    if (!o) throw UsageError("unknown optimizer '" + *f.optimizer + "'");
    t.optimizer = *o;
  }
  if (f.train_csv) spec.csv.train = *f.train_csv;
  if (f.test_csv) spec.csv.test = *f.test_csv;
  if (f.label_column) spec.csv.label_column = *f.label_column;
  if (f.class_column) spec.csv.class_column = *f.class_column;
  if (spec.output_dir.empty()) spec.output_dir = default_output_root();
  spec.validate();
  return spec;
}

int cmd_gen_data(const std::string& task_name, std::uint64_t seed, const fs::path& out) {
  const auto task = require_task(task_name);
  if (task == Task::csv) throw UsageError("gen-data supports mean-estimation and blobs");
  const auto spec = default_spec(task);
  const auto data = make_datasets(spec, seed);
  fs::create_directories(out);
  write_csv(data.train, out / "train.csv");
  write_csv(*data.test, out / "test.csv");
  std::cout << "wrote " << (out / "train.csv").string() << " (" << data.train.size() << " rows) and "
            << (out / "test.csv").string() << " (" << data.test->size() << " rows)\n";
  return kOk;
}

int cmd_train(const TrainFlags& flags) {
  const auto spec = build_spec(flags);
  const auto outcomes = run(spec);
  for (const auto& o : outcomes) std::cout << o.metrics.string() << '\n';
  std::cout << (spec.output_dir / "summary.csv").string() << '\n';
  return kOk;
}

int cmd_verify_theory(std::uint64_t seed, const std::optional<std::string>& out) {
  const auto report = verify_theory(seed);
  const auto text = to_json(report).dump(2);
  if (out) {
    std::ofstream f(*out);
    f << text << '\n';
    if (!f) throw Error("write failed for " + *out);
  }
  std::cout << text << '\n';
  return report.passed() ? kOk : kFailure;
}

std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      const auto found = find_metrics_files(in);
      files.insert(files.end(), found.begin(), found.end());
    } else {
      if (!fs::exists(in)) throw Error(in + " does not exist");
      files.emplace_back(in);
    }
  }
  if (files.empty()) throw UsageError("no metrics files found");
  return files;
}

int cmd_plot(const std::vector<std::string>& inputs, const std::string& out, const std::string& metric, bool alpha,
             bool log_y) {
  const auto files = expand_inputs(inputs);
  if (alpha) {
    if (files.size() != 1) throw UsageError("--alpha plots exactly one metrics file");
    const auto n = plot_alpha(files.front(), out);
    std::cout << "wrote " << out << " (" << n << " lines)\n";
  } else {
    const auto n = plot_metrics(files, out, {metric, metric + " vs epoch", log_y});
    std::cout << "wrote " << out << " (" << n << " lines)\n";
  }
  return kOk;
}

int cmd_summarize(const std::vector<std::string>& inputs, std::size_t epochs, const std::optional<std::string>& out) {
  const auto files = expand_inputs(inputs);
  const auto rows = summarize(files, epochs);
  fs::path target;
  if (out) {
    target = *out;
  } else if (inputs.size() == 1 && fs::is_directory(inputs.front())) {
    target = fs::path(inputs.front()) / "summary.csv";
  }
  if (!target.empty()) write_summary(rows, target);
  std::cout << "strategy,metric,epoch,n,mean,std\n";
  for (const auto& r : rows) {
    std::cout << r.strategy << ',' << r.metric << ',' << r.epoch << ',' << r.count << ',' << csv::format_double(r.mean)
              << ',' << (r.stddev ? csv::format_double(*r.stddev) : std::string()) << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"learn2mix: adaptive batch composition experiments"};
  app.require_subcommand(1);

  std::string gen_task = "mean-estimation", gen_out;
  std::uint64_t gen_seed = 0;
  auto* gen = app.add_subcommand("gen-data", "Write train.csv and test.csv for a synthetic task");
  gen->add_option("--task", gen_task, "mean-estimation or blobs")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Data seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();

  TrainFlags tf;
  auto* tr = app.add_subcommand("train", "Run a strategy x seed grid");
  tr->add_option("--task", tf.task, "mean-estimation, blobs, or csv");
  tr->add_option("--config", tf.config, "JSON config file or run manifest; flags win");
  tr->add_option("--strategy", tf.strategies, "learn2mix, classical, focal, smote, is, curriculum (repeatable)");
  tr->add_option("--seeds", tf.seeds, "Number of seeds");
  tr->add_option("--base-seed", tf.base_seed, "First seed");
  tr->add_option("--jobs", tf.jobs, "Parallel worker threads");
  tr->add_option("--epochs", tf.epochs, "Epochs E");
  tr->add_option("--batch-size", tf.batch_size, "Batch size M");
  tr->add_option("--lr", tf.learning_rate, "Learning rate");
  tr->add_option("--gamma", tf.mixing_rate, "Mixing rate");
  tr->add_option("--loss", tf.loss, "mse or cross_entropy");
  tr->add_option("--optimizer", tf.optimizer, "adam or sgd");
  tr->add_option("--eval-every", tf.eval_every, "Test evaluation period in epochs");
  tr->add_option("--hidden", tf.hidden, "Hidden layer width");
  tr->add_option("--focal-gamma", tf.focal_gamma, "Focal focusing parameter");
  tr->add_option("--smote-neighbors", tf.smote_neighbors, "SMOTE neighbour count");
  tr->add_option("--train-csv", tf.train_csv, "Training CSV (csv task)");
  tr->add_option("--test-csv", tf.test_csv, "Test CSV (csv task)");
  tr->add_option("--label-column", tf.label_column, "Numeric label column; omit for one-hot classes");
  tr->add_option("--class-column", tf.class_column, "Class column");
  tr->add_option("--out", tf.out, "Output directory (default: $L2M_OUTPUT_ROOT or runs)");
  tr->add_flag("--no-time", tf.no_time, "Leave elapsed_s empty so outputs depend only on the seed");
  tr->add_flag("--step-per-epoch", tf.step_per_epoch, "One optimizer step per epoch");

  std::uint64_t theory_seed = 0;
  std::optional<std::string> theory_out;
  auto* th = app.add_subcommand("verify-theory", "Certify the convergence results on quadratic instances");
  th->add_option("--seed", theory_seed, "Sweep seed")->capture_default_str();
  th->add_option("--out", theory_out, "Also write the JSON report here");

  std::vector<std::string> plot_inputs;
  std::string plot_out, plot_metric = "test_loss";
  bool plot_alpha_flag = false, plot_log = false;
  auto* pl = app.add_subcommand("plot", "Render metrics files as an SVG line chart");
  pl->add_option("inputs", plot_inputs, "Metrics files or run directories")->required();
  pl->add_option("--out", plot_out, "SVG output path")->required();
  pl->add_option("--metric", plot_metric, "Metric column")->capture_default_str();
  pl->add_flag("--alpha", plot_alpha_flag, "Plot the alpha trajectory of one run");
  pl->add_flag("--log-y", plot_log, "Logarithmic y axis");

  std::vector<std::string> sum_inputs;
  std::size_t sum_epochs = 0;
  std::optional<std::string> sum_out;
  auto* su = app.add_subcommand("summarize", "Recompute the summary table from metrics files");
  su->add_option("inputs", sum_inputs, "Metrics files or run directories")->required();
  su->add_option("--epochs", sum_epochs, "E for the checkpoints (default: last epoch found)");
  su->add_option("--out", sum_out, "Summary CSV path (default: <dir>/summary.csv for one directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_gen_data(gen_task, gen_seed, gen_out);
    if (*tr) return cmd_train(tf);
    if (*th) return cmd_verify_theory(theory_seed, theory_out);
    if (*pl) return cmd_plot(plot_inputs, plot_out, plot_metric, plot_alpha_flag, plot_log);
    if (*su) return cmd_summarize(sum_inputs, sum_epochs, sum_out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
