#include "parfilter/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "parfilter/errors.hpp"
#include "text_format.hpp"

namespace parfilter {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

double parse_double(const std::string& field, const std::string& path, std::size_t row,
                    const std::string& column) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc() || result.ptr != end || field.empty()) {
    throw ValidationError("'" + path + "' data row " + std::to_string(row) + ", column " +
                          column + ": cannot parse '" + field + "' as a number");
  }
  return value;
}

// Lines of the file with trailing carriage returns stripped; the final line
// may or may not end in a newline.
std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    throw ValidationError("cannot open '" + path + "' for reading");
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(file, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

// Shared reader: expects header `feature,<prefix>_1,...`; returns the named
// matrix and leaves range checks to the caller.
NamedMatrix read_named_csv(const std::string& path, const std::string& prefix) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) {
    throw ValidationError("'" + path + "' is empty");
  }
  const std::vector<std::string> header = split_fields(lines[0]);
  if (header.empty() || header[0] != "feature") {
    throw ValidationError("'" + path + "' header must start with 'feature'");
  }
  if (header.size() < 2) {
    throw ValidationError("'" + path + "' header lists no " + prefix + " columns");
  }
  for (std::size_t j = 1; j < header.size(); ++j) {
    const std::string expected = prefix + "_" + std::to_string(j);
    if (header[j] != expected) {
      throw ValidationError("'" + path + "' header column " + std::to_string(j + 1) +
                            " is '" + header[j] + "'; expected '" + expected + "'");
    }
  }

  NamedMatrix out;
  out.columns.assign(header.begin() + 1, header.end());
  const std::size_t width = out.columns.size();
  const std::size_t rows = lines.size() - 1;
  out.values = Matrix(rows, width);
  out.features.reserve(rows);
  std::unordered_set<std::string> seen;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::vector<std::string> fields = split_fields(lines[r + 1]);
    if (fields.size() != width + 1) {
      throw ValidationError("'" + path + "' data row " + std::to_string(r + 1) + " has " +
                            std::to_string(fields.size()) + " fields; expected " +
                            std::to_string(width + 1));
    }
    if (fields[0].empty()) {
      throw ValidationError("'" + path + "' data row " + std::to_string(r + 1) +
                            " has an empty feature key");
    }
    if (!seen.insert(fields[0]).second) {
      throw ValidationError("'" + path + "' data row " + std::to_string(r + 1) +
                            ": duplicate feature key '" + fields[0] + "'");
    }
    out.features.push_back(fields[0]);
    for (std::size_t j = 0; j < width; ++j) {
      out.values(r, j) = parse_double(fields[j + 1], path, r + 1, out.columns[j]);
    }
  }
  if (out.features.empty()) {
    throw ValidationError("'" + path + "' contains no data rows");
  }
  return out;
}

}  // namespace

NamedMatrix read_pvalue_csv(const std::string& path) {
  NamedMatrix out = read_named_csv(path, "study");
  for (std::size_t i = 0; i < out.values.rows(); ++i) {
    for (std::size_t j = 0; j < out.values.cols(); ++j) {
      const double p = out.values(i, j);
      if (!(p >= 0.0 && p <= 1.0)) {  // also catches NaN
        throw ValidationError("'" + path + "' data row " + std::to_string(i + 1) +
                              ", column " + out.columns[j] + ": p-value " +
                              text::format_double(p) + " is outside [0,1]");
      }
    }
  }
  return out;
}

NamedMatrix read_covariate_csv(const std::string& path) {
  NamedMatrix out = read_named_csv(path, "c");
  for (std::size_t i = 0; i < out.values.rows(); ++i) {
    for (std::size_t j = 0; j < out.values.cols(); ++j) {
      if (!std::isfinite(out.values(i, j))) {
        throw ValidationError("'" + path + "' data row " + std::to_string(i + 1) +
                              ", column " + out.columns[j] + ": value is not finite");
      }
    }
  }
  return out;
}

CovariateSet assemble_covariates(const std::vector<std::string>& paths,
                                 const std::vector<std::string>& features) {
  CovariateSet out;
  out.reserve(paths.size());
  for (std::size_t j = 0; j < paths.size(); ++j) {
    if (paths[j] == "-") {
      // No covariates for this study: one constant zero column.
      out.push_back(Matrix(features.size(), 1));
      continue;
    }
    NamedMatrix named = read_covariate_csv(paths[j]);
    if (named.features.size() != features.size()) {
      throw ValidationError("'" + paths[j] + "' lists " +
                            std::to_string(named.features.size()) + " features; the p-value "
                            "file lists " + std::to_string(features.size()));
    }
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (named.features[i] != features[i]) {
        throw ValidationError("'" + paths[j] + "' data row " + std::to_string(i + 1) +
                              ": feature key '" + named.features[i] +
                              "' does not match the p-value file's '" + features[i] + "'");
      }
    }
    out.push_back(std::move(named.values));
  }
  return out;
}

void write_csv(const NamedMatrix& matrix, const std::string& path) {
  if (matrix.features.size() != matrix.values.rows() ||
      matrix.columns.size() != matrix.values.cols()) {
    throw ValidationError("named matrix shape mismatch while writing '" + path + "'");
  }
  std::ostringstream body;
  body << "feature";
  for (const std::string& column : matrix.columns) body << ',' << column;
  body << '\n';
  for (std::size_t i = 0; i < matrix.values.rows(); ++i) {
    body << matrix.features[i];
    for (std::size_t j = 0; j < matrix.values.cols(); ++j) {
      body << ',' << text::format_double(matrix.values(i, j));
    }
    body << '\n';
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw ValidationError("cannot open '" + path + "' for writing");
  }
  file << body.str();
  if (!file) {
    throw ValidationError("failed writing '" + path + "'");
  }
}

}  // namespace parfilter
