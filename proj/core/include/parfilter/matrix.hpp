#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace parfilter {

// Minimal dense row-major table. Used for p-value matrices (double),
// per-feature local levels (int) and hypothesis statuses (uint8).
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  const T* row_data(std::size_t i) const { return data_.data() + i * cols_; }
  std::vector<T> row(std::size_t i) const {
    return std::vector<T>(row_data(i), row_data(i) + cols_);
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = Grid<double>;

// Per-study covariate matrices; entry j has one row per feature and d_j
// columns (a single all-zero column when a study carries no covariates).
using CovariateSet = std::vector<Matrix>;

}  // namespace parfilter
