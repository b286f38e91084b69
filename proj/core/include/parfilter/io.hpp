#pragma once

#include <string>
#include <vector>

#include "parfilter/matrix.hpp"

namespace parfilter {

// A matrix with row keys and column names, as read from or written to CSV.
struct NamedMatrix {
  std::vector<std::string> features;  // row keys, unique
  std::vector<std::string> columns;   // column names after the key column
  Matrix values;
};

// Reads `feature,study_1,...,study_n` with one p-value row per feature.
// Errors name the file, data row and column of the offending cell; entries
// must lie in [0,1], feature keys must be unique, rows must not be ragged.
NamedMatrix read_pvalue_csv(const std::string& path);

// Reads `feature,c_1,...,c_d` with arbitrary finite covariate values.
NamedMatrix read_covariate_csv(const std::string& path);

// One covariate matrix per study from per-study CSV paths. The placeholder
// "-" stands for a study without covariates and produces a single all-zero
// constant column. Real files must list exactly the given feature keys in
// the same order.
CovariateSet assemble_covariates(const std::vector<std::string>& paths,
                                 const std::vector<std::string>& features);

// Writes the matrix back in the same CSV shape with round-trip-exact
// (shortest) decimal formatting.
void write_csv(const NamedMatrix& matrix, const std::string& path);

}  // namespace parfilter
