#include "parfilter/combine.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dist.hpp"

namespace parfilter {

namespace {

void validate_pvalues(std::span<const double> p) {
  if (p.empty()) {
    throw ValidationError("p-value vector must be nonempty");
  }
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (!(p[j] >= 0.0 && p[j] <= 1.0)) {  // also catches NaN
      throw ValidationError("p-value at position " + std::to_string(j + 1) +
                            " is outside [0,1]");
    }
  }
}

double clamp(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

}  // namespace

Combiner combiner_from_name(const std::string& name) {
  if (name == "bonferroni") return Combiner::bonferroni;
  if (name == "fisher") return Combiner::fisher;
  if (name == "stouffer") return Combiner::stouffer;
  if (name == "simes") return Combiner::simes;
  throw ValidationError("unknown combiner '" + name +
                        "' (expected bonferroni, fisher, stouffer or simes)");
}

std::string combiner_name(Combiner combiner) {
  switch (combiner) {
    case Combiner::bonferroni: return "bonferroni";
    case Combiner::fisher: return "fisher";
    case Combiner::stouffer: return "stouffer";
    case Combiner::simes: return "simes";
  }
  throw ValidationError("invalid combiner enum value");
}

double combine_bonferroni(std::span<const double> p) {
  validate_pvalues(p);
  const double min_p = *std::min_element(p.begin(), p.end());
  return std::min(static_cast<double>(p.size()) * min_p, 1.0);
}

double combine_fisher(std::span<const double> p) {
  validate_pvalues(p);
  double stat = 0.0;  // -2 * sum of logs, accumulated as -sum of logs
  for (double v : p) {
    stat -= std::log(std::max(v, kLogClip));
  }
  return dist::chisq_survival(2.0 * stat, 2.0 * static_cast<double>(p.size()));
}

double combine_stouffer(std::span<const double> p) {
  validate_pvalues(p);
  double z_sum = 0.0;
  for (double v : p) {
    // Phi^{-1}(1 - p) = -Phi^{-1}(p)
    z_sum -= dist::normal_quantile(clamp(v, kQuantileClip, 1.0 - kQuantileClip));
  }
  return dist::normal_cdf(-z_sum / std::sqrt(static_cast<double>(p.size())));
}

double combine_simes(std::span<const double> p) {
  validate_pvalues(p);
  std::vector<double> sorted(p.begin(), p.end());
  std::sort(sorted.begin(), sorted.end());
  const double l = static_cast<double>(sorted.size());
  double out = 1.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    out = std::min(out, l * sorted[j] / static_cast<double>(j + 1));
  }
  return out;
}

double combine_pvalues(Combiner combiner, std::span<const double> p) {
  switch (combiner) {
    case Combiner::bonferroni: return combine_bonferroni(p);
    case Combiner::fisher: return combine_fisher(p);
    case Combiner::stouffer: return combine_stouffer(p);
    case Combiner::simes: return combine_simes(p);
  }
  throw ValidationError("invalid combiner enum value");
}

double partial_conjunction_pvalue(std::span<const double> p, int u, Combiner combiner) {
  validate_pvalues(p);
  const int l = static_cast<int>(p.size());
  if (u < 1 || u > l) {
    throw ValidationError("replicability level u=" + std::to_string(u) +
                          " must lie in [1, " + std::to_string(l) + "]");
  }
  // The maximizing subset consists of the largest l-u+1 entries.
  std::vector<double> sorted(p.begin(), p.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t subset = static_cast<std::size_t>(l - u + 1);
  if (subset == 1) {
    // Every supported combiner maps a single p-value to itself; returning
    // the maximum directly keeps the u = l case exact.
    return sorted.back();
  }
  return combine_pvalues(combiner,
                         std::span<const double>(sorted.data() + (u - 1), subset));
}

double partial_conjunction_pvalue_enumerated(std::span<const double> p, int u,
                                             Combiner combiner) {
  validate_pvalues(p);
  const int l = static_cast<int>(p.size());
  if (u < 1 || u > l) {
    throw ValidationError("replicability level u=" + std::to_string(u) +
                          " must lie in [1, " + std::to_string(l) + "]");
  }
  if (l > kEnumerationLimit) {
    throw ValidationError("subset enumeration supports at most " +
                          std::to_string(kEnumerationLimit) + " p-values, got " +
                          std::to_string(l));
  }
  const int subset = l - u + 1;
  // Walk all size-(l-u+1) index subsets in lexicographic order.
  std::vector<int> idx(subset);
  for (int j = 0; j < subset; ++j) idx[j] = j;
  std::vector<double> values(subset);
  double worst = 0.0;
  while (true) {
    for (int j = 0; j < subset; ++j) values[j] = p[idx[j]];
    worst = std::max(worst, combine_pvalues(combiner, values));
    int j = subset - 1;
    while (j >= 0 && idx[j] == l - subset + j) --j;
    if (j < 0) break;
    ++idx[j];
    for (int t = j + 1; t < subset; ++t) idx[t] = idx[t - 1] + 1;
  }
  return worst;
}

}  // namespace parfilter
