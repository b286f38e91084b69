#pragma once

#include <span>
#include <string>

#include "parfilter/errors.hpp"

namespace parfilter {

// The four p-value combining functions supported throughout: each is
// symmetric and non-decreasing in every argument, and valid for independent
// inputs under the intersection null.
enum class Combiner { bonferroni, fisher, stouffer, simes };

Combiner combiner_from_name(const std::string& name);
std::string combiner_name(Combiner combiner);

// Largest group size accepted by subset enumeration; the subset count grows
// combinatorially beyond this.
inline constexpr int kEnumerationLimit = 25;

// Clipping bounds that keep the normal quantile and the log finite without
// perturbing results at test tolerance.
inline constexpr double kQuantileClip = 1e-15;
inline constexpr double kLogClip = 1e-300;

// (l * min p) capped at 1.
double combine_bonferroni(std::span<const double> p);

// Survival of chi-squared(2l) at -2 * sum(log p); entries clipped to
// [1e-300, 1] before the log.
double combine_fisher(std::span<const double> p);

// 1 - Phi(sum Phi^{-1}(1 - p_j) / sqrt(l)); entries clipped to
// [1e-15, 1 - 1e-15] before the quantile.
double combine_stouffer(std::span<const double> p);

// min over j of l * p_(j) / j.
double combine_simes(std::span<const double> p);

double combine_pvalues(Combiner combiner, std::span<const double> p);

// Partial-conjunction p-value for "at least u of the l hypotheses are
// signals": the maximum combined p-value over all subsets of size l-u+1.
// All four combiners are symmetric and monotone, so the maximum is attained
// at the largest l-u+1 entries and is computed from those order statistics.
// For u = l this reduces to max(p) under every combiner.
double partial_conjunction_pvalue(std::span<const double> p, int u, Combiner combiner);

// Reference implementation by explicit subset enumeration; rejects inputs
// longer than kEnumerationLimit.
double partial_conjunction_pvalue_enumerated(std::span<const double> p, int u,
                                             Combiner combiner);

}  // namespace parfilter
