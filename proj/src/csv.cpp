#include "learn2mix/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "learn2mix/data.hpp"
#include "learn2mix/errors.hpp"

namespace l2m {
namespace csv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::size_t Table::column(const std::string& name) const {
  if (auto c = find_column(name)) return *c;
  throw MissingColumn(name);
}

std::optional<std::size_t> Table::find_column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

std::vector<std::string> split_record(std::string_view line, char delimiter) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == delimiter) {
      out.emplace_back(trim(field));
      field.clear();
    } else {
      field.push_back(ch);
    }
  }
  out.emplace_back(trim(field));
  return out;
}

Table read(const std::filesystem::path& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  Table table;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    auto fields = split_record(line, delimiter);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw ParseError(lineno, "expected " + std::to_string(table.header.size()) + " fields, found " +
                                   std::to_string(fields.size()));
    }
    table.rows.push_back({lineno, std::move(fields)});
  }
  if (!have_header) throw ParseError(lineno, "missing header row");
  return table;
}

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace csv

namespace {

// Numeric class labels sort by value so that "10" follows "9".
std::vector<std::string> sorted_values(const csv::Table& table, std::size_t column) {
  std::set<std::string> values;
  for (const auto& r : table.rows) values.insert(r.fields[column]);
  std::vector<std::string> out(values.begin(), values.end());
  const bool numeric = std::all_of(out.begin(), out.end(), [](const auto& v) { return csv::parse_double(v).has_value(); });
  if (numeric) {
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return *csv::parse_double(a) < *csv::parse_double(b); });
  }
  return out;
}

}  // namespace

std::vector<std::string> read_class_values(const std::filesystem::path& path, const std::string& class_column,
                                           const CsvSchema& schema) {
  const auto table = csv::read(path, schema.delimiter);
  return sorted_values(table, table.column(class_column));
}

ClassPartitionedDataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                                 const std::string& class_column, const CsvSchema& schema) {
  const auto table = csv::read(path, schema.delimiter);
  const auto cc = table.column(class_column);
  std::optional<std::size_t> lc;
  if (!label_column.empty()) lc = table.column(label_column);

  std::vector<std::size_t> feature_cols;
  if (schema.feature_columns.empty()) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (c != cc && (!lc || c != *lc)) feature_cols.push_back(c);
    }
  } else {
    for (const auto& name : schema.feature_columns) feature_cols.push_back(table.column(name));
  }

  std::vector<std::string> classes = schema.class_values;
  if (classes.empty()) classes = sorted_values(table, cc);
  if (classes.empty()) throw EmptyClass(0);
  std::map<std::string, std::size_t> class_index;
  for (std::size_t i = 0; i < classes.size(); ++i) class_index.emplace(classes[i], i);

  std::vector<std::vector<Sample>> stores(classes.size());
  for (const auto& r : table.rows) {
    auto it = class_index.find(r.fields[cc]);
    if (it == class_index.end()) throw ParseError(r.line, "unknown class value '" + r.fields[cc] + "'");
    Sample s;
    s.class_id = it->second;
    s.features.resize(static_cast<Eigen::Index>(feature_cols.size()));
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      auto v = csv::parse_double(r.fields[feature_cols[j]]);
      if (!v || !std::isfinite(*v)) throw NonNumericFeature(r.line, table.header[feature_cols[j]]);
      s.features[static_cast<Eigen::Index>(j)] = *v;
    }
    if (lc) {
      auto v = csv::parse_double(r.fields[*lc]);
      if (!v || !std::isfinite(*v)) throw NonNumericFeature(r.line, table.header[*lc]);
      s.label = Eigen::VectorXd::Constant(1, *v);
    } else {
      s.label = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(classes.size()));
      s.label[static_cast<Eigen::Index>(s.class_id)] = 1.0;
    }
    stores[s.class_id].push_back(std::move(s));
  }
  for (std::size_t i = 0; i < stores.size(); ++i) {
    if (stores[i].empty()) throw EmptyClass(i);
  }
  return ClassPartitionedDataset(std::move(stores));
}

void write_csv(const ClassPartitionedDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (std::size_t j = 0; j < ds.feature_dim(); ++j) out << 'f' << j << ',';
  if (ds.label_dim() == 1) {
    out << "label,";
  } else {
    for (std::size_t j = 0; j < ds.label_dim(); ++j) out << "label" << j << ',';
  }
  out << "class\n";
  for (std::size_t c = 0; c < ds.num_classes(); ++c) {
    for (const auto& s : ds.store(c)) {
      for (Eigen::Index j = 0; j < s.features.size(); ++j) out << csv::format_double(s.features[j]) << ',';
      for (Eigen::Index j = 0; j < s.label.size(); ++j) out << csv::format_double(s.label[j]) << ',';
      out << s.class_id << '\n';
    }
  }
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace l2m
