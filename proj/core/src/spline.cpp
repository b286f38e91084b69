#include "parfilter/spline.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "parfilter/errors.hpp"

namespace parfilter {

namespace {

// Quantile by linear interpolation between order statistics.
double quantile(const std::vector<double>& sorted, double level) {
  const double position = level * static_cast<double>(sorted.size() - 1);
  const auto lower = static_cast<std::size_t>(position);
  if (lower + 1 >= sorted.size()) return sorted.back();
  const double fraction = position - static_cast<double>(lower);
  return sorted[lower] + fraction * (sorted[lower + 1] - sorted[lower]);
}

double cube_plus(double x) {
  const double clipped = std::max(x, 0.0);
  return clipped * clipped * clipped;
}

}  // namespace

Matrix natural_cubic_basis(std::span<const double> values, int df) {
  if (df < 2) {
    throw ValidationError("spline basis needs df >= 2, got " + std::to_string(df));
  }
  if (values.empty()) {
    throw ValidationError("spline basis needs at least one value");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw ValidationError("spline input at position " + std::to_string(i + 1) +
                            " is not finite");
    }
  }

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t knot_count = static_cast<std::size_t>(df) + 1;
  std::vector<double> knots(knot_count);
  for (std::size_t j = 0; j < knot_count; ++j) {
    knots[j] = quantile(sorted, static_cast<double>(j) / static_cast<double>(df));
  }
  for (std::size_t j = 1; j < knot_count; ++j) {
    if (!(knots[j] > knots[j - 1])) {
      throw ValidationError("spline inputs yield fewer than " + std::to_string(knot_count) +
                            " distinct knots (knot " + std::to_string(j) + " and " +
                            std::to_string(j + 1) + " coincide)");
    }
  }

  // Scaled truncated cubics d_k anchored at the last knot; differencing the
  // last one out enforces linearity beyond the boundary knots.
  const double boundary = knots.back();
  const auto hinge = [&](double x, std::size_t k) {
    return (cube_plus(x - knots[k]) - cube_plus(x - boundary)) / (boundary - knots[k]);
  };

  Matrix basis(values.size(), static_cast<std::size_t>(df));
  const std::size_t last = knot_count - 2;  // index of the differenced-out term
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = values[i];
    basis(i, 0) = x;
    const double tail = hinge(x, last);
    for (std::size_t k = 0; k + 1 < knot_count - 1; ++k) {
      basis(i, k + 1) = hinge(x, k) - tail;
    }
  }
  return basis;
}

}  // namespace parfilter
