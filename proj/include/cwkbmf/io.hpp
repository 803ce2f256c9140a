#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cwkbmf/types.hpp"

namespace cwkbmf {

// Expression CSV layout: first row = sample ids, first column = feature
// (gene) ids, cell (g, s) = value of gene g in sample s.  The returned
// matrix is transposed to samples x features.
FeatureMatrix read_expression_csv(const std::filesystem::path& path);

// Response CSV layout: first row = drug ids, first column = sample ids,
// empty cells mark missing entries.
ResponseMatrix read_response_csv(const std::filesystem::path& path);
void write_response_csv(const std::filesystem::path& path, const ResponseMatrix& y);

// GMT: one gene set per line, tab separated: name, description, genes...
std::vector<GeneSet> read_gmt(const std::filesystem::path& path);

// One non-empty name per line; surrounding whitespace trimmed.
std::vector<std::string> read_name_list(const std::filesystem::path& path);

// Dense matrix with row/column labels; used for kernels and predictions.
void write_labeled_csv(const std::filesystem::path& path, const Matrix& m,
                       const std::vector<std::string>& row_ids,
                       const std::vector<std::string>& col_ids, const std::string& corner);

// Shortest representation that round-trips a double exactly.
std::string format_double(double x);

void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace cwkbmf
