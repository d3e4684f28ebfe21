#include "learn2mix/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "learn2mix/csv.hpp"
#include "learn2mix/errors.hpp"
#include "learn2mix/experiment.hpp"

namespace l2m {

namespace {

constexpr double kWidth = 720, kHeight = 440;
constexpr double kLeft = 70, kRight = 170, kTop = 40, kBottom = 50;
constexpr std::array<const char*, 8> kColors{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                             "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

double epoch_of(const csv::Row& row, std::size_t column) {
  const auto e = csv::parse_double(row.fields[column]);
  if (!e) throw ParseError(row.line, "epoch is not a number");
  return *e;
}

}  // namespace

std::string render_svg(const std::vector<Series>& series, const std::string& x_label, const std::string& y_label,
                       const std::string& title, bool log_y) {
  auto ty = [log_y](double v) { return log_y ? std::log10(std::max(v, 1e-300)) : v; };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(y) || (log_y && y <= 0)) continue;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, ty(y));
      y1 = std::max(y1, ty(y));
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (ty(y) - y0) / (y1 - y0)) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << fmt(kLeft) << "\" y=\"24\" font-size=\"14\">" << escape(title) << "</text>\n";
  svg << "<rect x=\"" << fmt(kLeft) << "\" y=\"" << fmt(kTop) << "\" width=\"" << fmt(pw) << "\" height=\"" << fmt(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
    const double gx = kLeft + pw * i / 4.0, gy = kTop + ph * (1.0 - i / 4.0);
    svg << "<text x=\"" << fmt(gx) << "\" y=\"" << fmt(kTop + ph + 16) << "\" text-anchor=\"middle\">" << tick(fx)
        << "</text>\n";
    svg << "<text x=\"" << fmt(kLeft - 6) << "\" y=\"" << fmt(gy + 4) << "\" text-anchor=\"end\">"
        << tick(log_y ? std::pow(10.0, fy) : fy) << "</text>\n";
  }
  svg << "<text x=\"" << fmt(kLeft + pw / 2) << "\" y=\"" << fmt(kHeight - 12) << "\" text-anchor=\"middle\">"
      << escape(x_label) << "</text>\n";
  svg << "<text transform=\"translate(16," << fmt(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(y_label) << (log_y ? " (log)" : "") << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto* color = kColors[i % kColors.size()];
    svg << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (const auto& [x, y] : series[i].points) {
      if (!std::isfinite(y) || (log_y && y <= 0)) continue;
      svg << (first ? "" : " ") << fmt(px(x)) << ',' << fmt(py(y));
      first = false;
    }
    svg << "\"/>\n";
    const double ly = kTop + 14 + 18.0 * static_cast<double>(i);
    svg << "<line x1=\"" << fmt(kWidth - kRight + 12) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\""
        << fmt(kWidth - kRight + 32) << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text class=\"legend\" x=\"" << fmt(kWidth - kRight + 38) << "\" y=\"" << fmt(ly) << "\">"
        << escape(series[i].name) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<Series> metric_series(const std::vector<std::filesystem::path>& metrics_files, const std::string& metric) {
  if (metrics_files.empty()) throw UsageError("no metrics files to plot");
  std::vector<std::string> order;
  std::map<std::string, std::map<double, std::pair<double, std::size_t>>> sums;
  for (const auto& file : metrics_files) {
    auto name = strategy_of(file);
    if (name.empty()) name = file.stem().string();
    if (std::find(order.begin(), order.end(), name) == order.end()) order.push_back(name);
    const auto table = csv::read(file);
    const auto ec = table.column("epoch");
    const auto mc = table.column(metric);
    for (const auto& r : table.rows) {
      const auto v = csv::parse_double(r.fields[mc]);
      if (!v) continue;
      auto& slot = sums[name][epoch_of(r, ec)];
      slot.first += *v;
      ++slot.second;
    }
  }
  std::vector<Series> out;
  for (const auto& name : order) {
    Series s{name, {}};
    for (const auto& [epoch, acc] : sums[name]) s.points.emplace_back(epoch, acc.first / static_cast<double>(acc.second));
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Series> alpha_series(const std::filesystem::path& metrics_file) {
  const auto table = csv::read(metrics_file);
  const auto ec = table.column("epoch");
  std::vector<Series> out;
  for (std::size_t i = 0;; ++i) {
    const auto name = "alpha_" + std::to_string(i);
    const auto col = table.find_column(name);
    if (!col) break;
    Series s{name, {}};
    for (const auto& r : table.rows) {
      if (const auto v = csv::parse_double(r.fields[*col])) s.points.emplace_back(epoch_of(r, ec), *v);
    }
    out.push_back(std::move(s));
  }
  if (out.empty()) throw MissingColumn("alpha_0");
  return out;
}

namespace {

void write_text(const std::filesystem::path& out, const std::string& text) {
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  std::ofstream f(out);
  f << text;
  if (!f) throw Error("write failed for " + out.string());
}

}  // namespace

std::size_t plot_metrics(const std::vector<std::filesystem::path>& metrics_files, const std::filesystem::path& out,
                         const PlotOptions& options) {
  const auto series = metric_series(metrics_files, options.metric);
  write_text(out, render_svg(series, "epoch", options.metric, options.title, options.log_y));
  return series.size();
}

std::size_t plot_alpha(const std::filesystem::path& metrics_file, const std::filesystem::path& out) {
  const auto series = alpha_series(metrics_file);
  write_text(out, render_svg(series, "epoch", "mixing parameter", metrics_file.stem().string()));
  return series.size();
}

}  // namespace l2m
