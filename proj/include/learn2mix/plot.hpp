#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace l2m {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;  // (epoch, value)
};

struct PlotOptions {
  std::string metric = "test_loss";
  std::string title;
  bool log_y = false;
};

/// Deterministic SVG line chart with a legend entry per series.
std::string render_svg(const std::vector<Series>& series, const std::string& x_label, const std::string& y_label,
                       const std::string& title, bool log_y = false);

/// One line per strategy (the <strategy>_seed<S>.csv prefix), the metric averaged
/// over seeds at each epoch where it is present. Throws MissingColumn.
std::vector<Series> metric_series(const std::vector<std::filesystem::path>& metrics_files, const std::string& metric);

/// One line per alpha_i column of a single metrics file. Throws MissingColumn.
std::vector<Series> alpha_series(const std::filesystem::path& metrics_file);

/// Writes the metric plot and returns the number of lines drawn.
std::size_t plot_metrics(const std::vector<std::filesystem::path>& metrics_files, const std::filesystem::path& out,
                         const PlotOptions& options = {});
std::size_t plot_alpha(const std::filesystem::path& metrics_file, const std::filesystem::path& out);

}  // namespace l2m
