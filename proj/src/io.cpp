#include "cwkbmf/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

namespace cwkbmf {

namespace {

std::string trim(const std::string& s) {
  const auto from = s.find_first_not_of(" \t\r\n");
  if (from == std::string::npos) return {};
  const auto to = s.find_last_not_of(" \t\r\n");
  return s.substr(from, to - from + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

double parse_double(const std::string& field, const std::filesystem::path& path, std::size_t row) {
  const std::string t = trim(field);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end == t.c_str() || *end != '\0' || errno == ERANGE)
    throw ParseError("'" + path.string() + "' line " + std::to_string(row + 1) +
                     ": cannot parse number '" + field + "'");
  return v;
}

}  // namespace

FeatureMatrix read_expression_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.size() < 2) throw ParseError("'" + path.string() + "': need a header and one row");
  const auto header = split(lines[0], ',');
  if (header.size() < 2) throw ParseError("'" + path.string() + "': header has no sample ids");

  FeatureMatrix fm;
  for (std::size_t j = 1; j < header.size(); ++j) fm.sample_ids.push_back(trim(header[j]));
  const std::size_t n_samples = fm.sample_ids.size();
  const std::size_t n_features = lines.size() - 1;
  fm.values.resize(static_cast<Index>(n_samples), static_cast<Index>(n_features));

  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split(lines[r], ',');
    if (fields.size() != n_samples + 1)
      throw ParseError("'" + path.string() + "' line " + std::to_string(r + 1) +
                       ": expected " + std::to_string(n_samples + 1) + " fields, got " +
                       std::to_string(fields.size()));
    fm.feature_ids.push_back(trim(fields[0]));
    for (std::size_t j = 0; j < n_samples; ++j)
      fm.values(static_cast<Index>(j), static_cast<Index>(r - 1)) =
          parse_double(fields[j + 1], path, r);
  }
  fm.validate();
  return fm;
}

ResponseMatrix read_response_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.size() < 2) throw ParseError("'" + path.string() + "': need a header and one row");
  const auto header = split(lines[0], ',');
  if (header.size() < 2) throw ParseError("'" + path.string() + "': header has no drug ids");

  ResponseMatrix y;
  for (std::size_t j = 1; j < header.size(); ++j) y.col_ids.push_back(trim(header[j]));
  const std::size_t n_cols = y.col_ids.size();
  const std::size_t n_rows = lines.size() - 1;
  y.values.setZero(static_cast<Index>(n_rows), static_cast<Index>(n_cols));
  y.mask.setConstant(static_cast<Index>(n_rows), static_cast<Index>(n_cols), false);

  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split(lines[r], ',');
    if (fields.size() != n_cols + 1)
      throw ParseError("'" + path.string() + "' line " + std::to_string(r + 1) +
                       ": expected " + std::to_string(n_cols + 1) + " fields, got " +
                       std::to_string(fields.size()));
    y.row_ids.push_back(trim(fields[0]));
    for (std::size_t j = 0; j < n_cols; ++j) {
      if (trim(fields[j + 1]).empty()) continue;
      y.values(static_cast<Index>(r - 1), static_cast<Index>(j)) =
          parse_double(fields[j + 1], path, r);
      y.mask(static_cast<Index>(r - 1), static_cast<Index>(j)) = true;
    }
  }
  y.validate();
  return y;
}

void write_response_csv(const std::filesystem::path& path, const ResponseMatrix& y) {
  std::ostringstream out;
  out << "sample";
  for (const auto& c : y.col_ids) out << ',' << c;
  out << '\n';
  for (Index i = 0; i < y.rows(); ++i) {
    out << y.row_ids[static_cast<std::size_t>(i)];
    for (Index j = 0; j < y.cols(); ++j) {
      out << ',';
      if (y.mask(i, j)) out << format_double(y.values(i, j));
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

std::vector<GeneSet> read_gmt(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::vector<GeneSet> sets;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    if (trim(lines[r]).empty()) continue;
    const auto fields = split(lines[r], '\t');
    if (fields.size() < 3)
      throw ParseError("'" + path.string() + "' line " + std::to_string(r + 1) +
                       ": a gene set needs a name, a description and at least one gene");
    GeneSet gs{trim(fields[0]), trim(fields[1]), {}};
    if (gs.name.empty())
      throw ParseError("'" + path.string() + "' line " + std::to_string(r + 1) +
                       ": empty gene set name");
    for (std::size_t j = 2; j < fields.size(); ++j) {
      const std::string g = trim(fields[j]);
      if (!g.empty()) gs.genes.push_back(g);
    }
    if (gs.genes.empty())
      throw ParseError("'" + path.string() + "' line " + std::to_string(r + 1) +
                       ": gene set without genes");
    sets.push_back(std::move(gs));
  }
  if (sets.empty()) throw ParseError("'" + path.string() + "': no gene sets");
  return sets;
}

std::vector<std::string> read_name_list(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::vector<std::string> names;
  for (const auto& line : lines) {
    const std::string t = trim(line);
    if (!t.empty()) names.push_back(t);
  }
  return names;
}

void write_labeled_csv(const std::filesystem::path& path, const Matrix& m,
                       const std::vector<std::string>& row_ids,
                       const std::vector<std::string>& col_ids, const std::string& corner) {
  if (static_cast<Index>(row_ids.size()) != m.rows() ||
      static_cast<Index>(col_ids.size()) != m.cols())
    throw DimensionError("write_labeled_csv: label counts do not match matrix shape");
  std::ostringstream out;
  out << corner;
  for (const auto& c : col_ids) out << ',' << c;
  out << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    out << row_ids[static_cast<std::size_t>(i)];
    for (Index j = 0; j < m.cols(); ++j) out << ',' << format_double(m(i, j));
    out << '\n';
  }
  write_text_file(path, out.str());
}

std::string format_double(double x) {
  char buf[40];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, x);
    if (std::strtod(buf, nullptr) == x) return buf;
  }
  return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << contents;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace cwkbmf
