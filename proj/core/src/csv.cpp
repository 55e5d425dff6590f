#include "vbsf/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vbsf/errors.hpp"

namespace vbsf {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::vector<std::string>> read_cells(const std::string& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, delimiter)) fields.push_back(trim(field));
    if (!line.empty() && line.back() == delimiter) fields.push_back("");
    if (line.empty()) fields.push_back("");
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw config_error("empty csv: " + path);
  const size_t width = rows.front().size();
  for (size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != width) {
      throw config_error(path + ": line " + std::to_string(i + 1) + " has " +
                         std::to_string(rows[i].size()) + " fields, expected " +
                         std::to_string(width));
    }
  }
  return rows;
}

double parse_number(const std::string& field, const std::string& path, size_t line, size_t col) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc{} || result.ptr != end) {
    throw config_error(path + ": line " + std::to_string(line) + ", field " + std::to_string(col) +
                       ": cannot parse '" + field + "' as a number");
  }
  return value;
}

}  // namespace

ObservationWindow StreamSource::window(int start, int len) const {
  if (start < 0 || len < 1 || start + len > cols()) {
    throw config_error("stream window [" + std::to_string(start) + ", " +
                       std::to_string(start + len) + ") outside the loaded span");
  }
  return ObservationWindow(values.middleCols(start, len), mask.middleCols(start, len));
}

StreamSource load_csv(const std::string& path, const CsvOptions& opts) {
  const auto cells = read_cells(path, opts.delimiter);
  const int m = static_cast<int>(cells.size());
  const int t = static_cast<int>(cells.front().size());
  StreamSource src;
  src.values = MatrixXd::Zero(m, t);
  src.mask = MaskMatrix::Constant(m, t, false);
  for (int i = 0; i < m; ++i) {
    for (int c = 0; c < t; ++c) {
      const std::string& field = cells[i][c];
      if (opts.missing_tokens.count(field)) continue;
      src.values(i, c) = parse_number(field, path, i + 1, c + 1);
      src.mask(i, c) = true;
    }
  }
  return src;
}

StreamSource load_csv(const std::string& path, const std::string& mask_path,
                      const CsvOptions& opts) {
  StreamSource src = load_csv(path, opts);
  const auto cells = read_cells(mask_path, opts.delimiter);
  if (static_cast<int>(cells.size()) != src.rows() ||
      static_cast<int>(cells.front().size()) != src.cols()) {
    throw config_error("mask sidecar shape differs from data: " + mask_path);
  }
  for (int i = 0; i < src.rows(); ++i) {
    for (int c = 0; c < src.cols(); ++c) {
      const double flag = parse_number(cells[i][c], mask_path, i + 1, c + 1);
      const bool observed = flag != 0.0;
      if (observed && !src.mask(i, c)) {
        throw config_error(mask_path + ": line " + std::to_string(i + 1) + ", field " +
                           std::to_string(c + 1) + " marks a missing cell as observed");
      }
      src.mask(i, c) = observed;
      if (!observed) src.values(i, c) = 0.0;
    }
  }
  return src;
}

namespace {

void format_double(std::string& out, double v) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, result.ptr);
}

}  // namespace

void write_csv(const std::string& path, const MatrixXd& values, const MaskMatrix* mask,
               char delimiter) {
  if (mask && (mask->rows() != values.rows() || mask->cols() != values.cols())) {
    throw config_error("write_csv: mask shape differs from values");
  }
  std::ofstream out(path);
  if (!out) throw config_error("cannot open for writing: " + path);
  std::string line;
  for (long i = 0; i < values.rows(); ++i) {
    line.clear();
    for (long c = 0; c < values.cols(); ++c) {
      if (c) line.push_back(delimiter);
      if (!mask || (*mask)(i, c)) format_double(line, values(i, c));
    }
    line.push_back('\n');
    out << line;
  }
  if (!out) throw config_error("write failed: " + path);
}

void write_mask_csv(const std::string& path, const MaskMatrix& mask, char delimiter) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open for writing: " + path);
  for (long i = 0; i < mask.rows(); ++i) {
    for (long c = 0; c < mask.cols(); ++c) {
      if (c) out << delimiter;
      out << (mask(i, c) ? 1 : 0);
    }
    out << '\n';
  }
  if (!out) throw config_error("write failed: " + path);
}

}  // namespace vbsf
