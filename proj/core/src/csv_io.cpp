#include "nclens/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "nclens/errors.hpp"

namespace nclens {

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.feature_names = feature_names;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.target.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= this->rows()) throw ContractViolation("dataset row index out of range");
    const auto src = static_cast<Eigen::Index>(rows[r]);
    out.features.row(static_cast<Eigen::Index>(r)) = features.row(src);
    out.target(static_cast<Eigen::Index>(r)) = target(src);
  }
  return out;
}

namespace io {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

bool is_missing(const std::string& s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "?";
}

std::vector<std::vector<std::string>> read_rows(std::istream& in, std::vector<std::string>& header) {
  std::string line;
  if (!std::getline(in, line)) throw ContractViolation("CSV input is empty");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  header = split_row(line);
  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_row(line);
    if (cells.size() != header.size()) {
      throw ContractViolation("CSV line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                              " fields, header has " + std::to_string(header.size()));
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractViolation("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ContractViolation("cannot write " + path.string());
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw NumericalFailure("cannot format number");
  return std::string(buf, ptr);
}

PredictionMatrix read_prediction_csv(std::istream& in) {
  std::vector<std::string> header;
  const auto rows = read_rows(in, header);
  if (header.size() < 2 || header.front() != "y_true") {
    throw ContractViolation("prediction CSV header must start with y_true followed by model names");
  }
  if (rows.empty()) throw ContractViolation("prediction CSV has no data rows");
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto m = static_cast<Eigen::Index>(header.size() - 1);
  Matrix values(n, m);
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    for (std::size_t c = 0; c < row.size(); ++c) {
      const auto v = parse_number(row[c]);
      if (!v) throw ContractViolation("non-numeric value '" + row[c] + "' in prediction CSV row " + std::to_string(i + 1));
      if (c == 0) {
        y(i) = *v;
      } else {
        values(i, static_cast<Eigen::Index>(c - 1)) = *v;
      }
    }
  }
  return {std::move(values), std::move(y), std::vector<std::string>(header.begin() + 1, header.end())};
}

PredictionMatrix read_prediction_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_prediction_csv(in);
}

void write_prediction_csv(std::ostream& out, const PredictionMatrix& preds) {
  out << "y_true";
  for (const auto& name : preds.model_names()) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < preds.samples(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out << format_double(preds.y_true()(ii));
    for (std::size_t j = 0; j < preds.models(); ++j) {
      out << ',' << format_double(preds.values()(ii, static_cast<Eigen::Index>(j)));
    }
    out << '\n';
  }
}

void write_prediction_csv(const std::filesystem::path& path, const PredictionMatrix& preds) {
  auto out = open_output(path);
  write_prediction_csv(out, preds);
}

Dataset read_dataset_csv(std::istream& in) {
  std::vector<std::string> header;
  auto rows = read_rows(in, header);
  const auto target_it = std::find(header.begin(), header.end(), "target");
  if (target_it == header.end()) throw ContractViolation("dataset CSV needs a 'target' column");
  const auto target_col = static_cast<std::size_t>(target_it - header.begin());

  std::erase_if(rows, [](const std::vector<std::string>& r) { return std::any_of(r.begin(), r.end(), is_missing); });
  if (rows.empty()) throw ContractViolation("dataset CSV has no complete rows");

  // Nominal columns: any cell that does not parse as a number.
  std::vector<bool> nominal(header.size(), false);
  std::vector<std::set<std::string>> levels(header.size());
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (!parse_number(r[c])) nominal[c] = true;
      levels[c].insert(r[c]);
    }
  }
  if (nominal[target_col]) throw ContractViolation("target column must be numeric");

  Dataset data;
  struct Source {
    std::size_t column;
    std::optional<std::string> level;
  };
  std::vector<Source> sources;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == target_col) continue;
    if (!nominal[c]) {
      sources.push_back({c, std::nullopt});
      data.feature_names.push_back(header[c]);
    } else {
      for (const auto& level : levels[c]) {
        sources.push_back({c, level});
        data.feature_names.push_back(header[c] + "=" + level);
      }
    }
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  data.features.resize(n, static_cast<Eigen::Index>(sources.size()));
  data.target.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    data.target(i) = *parse_number(r[target_col]);
    for (std::size_t f = 0; f < sources.size(); ++f) {
      const auto& src = sources[f];
      const double v = src.level ? (r[src.column] == *src.level ? 1.0 : 0.0) : *parse_number(r[src.column]);
      data.features(i, static_cast<Eigen::Index>(f)) = v;
    }
  }
  return data;
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  for (const auto& name : data.feature_names) out << name << ',';
  out << "target\n";
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t f = 0; f < data.cols(); ++f) {
      out << format_double(data.features(ii, static_cast<Eigen::Index>(f))) << ',';
    }
    out << format_double(data.target(ii)) << '\n';
  }
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
  auto out = open_output(path);
  write_dataset_csv(out, data);
}

}  // namespace io
}  // namespace nclens
