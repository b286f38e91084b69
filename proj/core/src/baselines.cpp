#include "parfilter/baselines.hpp"

#include <algorithm>
#include <cstddef>
#include <string>

#include "parfilter/errors.hpp"
#include "parfilter/select.hpp"

namespace parfilter {

namespace {

void check_level(double q) {
  if (!(q > 0.0 && q < 1.0)) {
    throw ValidationError("FDR target q must lie in (0,1)");
  }
}

void check_probabilities(std::span<const double> p, const char* what) {
  if (p.empty()) {
    throw ValidationError(std::string(what) + " vector must be nonempty");
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0 && p[i] <= 1.0)) {  // also catches NaN
      throw ValidationError(std::string(what) + " at position " + std::to_string(i + 1) +
                            " is outside [0,1]");
    }
  }
}

// Step-up at thresholds i * slope: rejects everything at or below the
// largest order statistic satisfying its own threshold.
std::vector<int> stepup(std::span<const double> p, double slope) {
  std::vector<double> sorted(p.begin(), p.end());
  std::sort(sorted.begin(), sorted.end());
  double cutoff = -1.0;
  for (std::size_t i = sorted.size(); i > 0; --i) {
    if (sorted[i - 1] <= static_cast<double>(i) * slope) {
      cutoff = sorted[i - 1];
      break;
    }
  }
  std::vector<int> rejected;
  if (cutoff < 0.0) return rejected;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= cutoff) rejected.push_back(static_cast<int>(i));
  }
  return rejected;
}

}  // namespace

std::vector<int> bh(std::span<const double> p, double q) {
  check_level(q);
  check_probabilities(p, "p-value");
  return stepup(p, q / static_cast<double>(p.size()));
}

std::vector<int> by(std::span<const double> p, double q) {
  check_level(q);
  check_probabilities(p, "p-value");
  const double slope = q / (harmonic_number(p.size()) * static_cast<double>(p.size()));
  return stepup(p, slope);
}

std::vector<int> adaptive_bh_storey(std::span<const double> p, double q, double lambda) {
  check_level(q);
  check_probabilities(p, "p-value");
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw ValidationError("Storey tuning parameter lambda must lie in (0,1)");
  }
  std::size_t above = 0;
  for (double v : p) {
    if (v > lambda) ++above;
  }
  const double m = static_cast<double>(p.size());
  const double pi0 = (1.0 + static_cast<double>(above)) / ((1.0 - lambda) * m);
  return stepup(p, q / (m * pi0));
}

std::vector<int> cofilter_bh(std::span<const double> p, double q, double tau) {
  check_level(q);
  check_probabilities(p, "p-value");
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw ValidationError("filter threshold tau must lie in (0,1]");
  }
  std::vector<int> kept;
  std::vector<double> scaled;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= tau) {
      kept.push_back(static_cast<int>(i));
      scaled.push_back(p[i] / tau);
    }
  }
  if (kept.empty()) return {};
  const std::vector<int> inner = stepup(scaled, q / static_cast<double>(scaled.size()));
  std::vector<int> rejected;
  rejected.reserve(inner.size());
  for (int idx : inner) rejected.push_back(kept[idx]);
  return rejected;
}

std::vector<int> adaptive_cofilter_bh(std::span<const double> p, double q, double tau,
                                      double lambda) {
  check_level(q);
  check_probabilities(p, "p-value");
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw ValidationError("filter threshold tau must lie in (0,1]");
  }
  std::vector<int> kept;
  std::vector<double> scaled;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= tau) {
      kept.push_back(static_cast<int>(i));
      scaled.push_back(p[i] / tau);
    }
  }
  if (kept.empty()) return {};
  const std::vector<int> inner = adaptive_bh_storey(scaled, q, lambda);
  std::vector<int> rejected;
  rejected.reserve(inner.size());
  for (int idx : inner) rejected.push_back(kept[idx]);
  return rejected;
}

std::vector<int> bogomolov_heller_adaptive(const Matrix& p, double q, double lambda1,
                                           double lambda2) {
  check_level(q);
  if (p.cols() != 2) {
    throw ValidationError("the two-study procedure requires exactly 2 studies, got " +
                          std::to_string(p.cols()));
  }
  if (p.rows() == 0) {
    throw ValidationError("p-value matrix must be nonempty");
  }
  const double lambdas[2] = {lambda1, lambda2};
  for (double lambda : lambdas) {
    if (!(lambda > 0.0 && lambda < 1.0)) {
      throw ValidationError("Storey tuning parameter lambda must lie in (0,1)");
    }
  }
  for (std::size_t i = 0; i < p.rows(); ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      if (!(p(i, j) >= 0.0 && p(i, j) <= 1.0)) {
        throw ValidationError("p-value at feature " + std::to_string(i + 1) + ", study " +
                              std::to_string(j + 1) + " is outside [0,1]");
      }
    }
  }

  // Each study's selection looks only at the other study's column.
  const double cut = q / 2.0;
  std::vector<std::vector<int>> selected(2);
  for (std::size_t i = 0; i < p.rows(); ++i) {
    if (p(i, 1) <= cut) selected[0].push_back(static_cast<int>(i));
    if (p(i, 0) <= cut) selected[1].push_back(static_cast<int>(i));
  }
  if (selected[0].empty() || selected[1].empty()) return {};

  double pi[2];
  for (int j = 0; j < 2; ++j) {
    std::size_t above = 0;
    for (int i : selected[j]) {
      if (p(i, j) > lambdas[j]) ++above;
    }
    pi[j] = (1.0 + static_cast<double>(above)) /
            ((1.0 - lambdas[j]) * static_cast<double>(selected[j].size()));
  }

  // Features eligible for both selections, with both per-study caps applied.
  std::vector<int> both;
  {
    std::vector<char> in_first(p.rows(), 0);
    for (int i : selected[0]) in_first[i] = 1;
    for (int i : selected[1]) {
      if (in_first[i]) both.push_back(i);
    }
  }

  const auto passes_at = [&](int i, std::size_t r) {
    for (int j = 0; j < 2; ++j) {
      const double threshold =
          std::min(static_cast<double>(r) * q /
                       (2.0 * static_cast<double>(selected[j].size()) * pi[j]),
                   lambdas[j]);
      if (!(p(i, j) <= threshold)) return false;
    }
    return true;
  };
  for (std::size_t r = both.size(); r > 0; --r) {
    std::size_t count = 0;
    for (int i : both) {
      if (passes_at(i, r)) ++count;
    }
    if (count == r) {
      std::vector<int> rejected;
      for (int i : both) {
        if (passes_at(i, r)) rejected.push_back(i);
      }
      return rejected;
    }
  }
  return {};
}

std::vector<int> oracle_rejections(std::span<const double> psi, double q) {
  check_level(q);
  check_probabilities(psi, "posterior null probability");
  std::vector<double> sorted(psi.begin(), psi.end());
  std::sort(sorted.begin(), sorted.end());
  double cutoff = -1.0;
  double running = 0.0;
  for (std::size_t l = 0; l < sorted.size(); ++l) {
    running += sorted[l];
    if (running / static_cast<double>(l + 1) <= q) cutoff = sorted[l];
  }
  std::vector<int> rejected;
  if (cutoff < 0.0) return rejected;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    if (psi[i] <= cutoff) rejected.push_back(static_cast<int>(i));
  }
  return rejected;
}

}  // namespace parfilter
