#include "parfilter/select.hpp"

#include <algorithm>

namespace parfilter {

namespace {

SelectionResult selection_with_scale(const Matrix& local_pc, const TestingConfig& config,
                                     double q, double scale, const std::string& rule) {
  validate_config(config);
  if (!(q > 0.0 && q < 1.0)) {
    throw ValidationError("target FDR level q must lie in (0,1)");
  }
  const std::size_t m = local_pc.rows();
  const int K = config.group_count();
  if (local_pc.cols() != static_cast<std::size_t>(K) || m != config.feature_count()) {
    throw ValidationError("local PC p-value matrix dimensions do not match the configuration");
  }
  SelectionResult result;
  result.rule = rule;
  result.q = q;
  result.sets.resize(K);
  std::vector<double> cutoffs(K);
  for (int l = 0; l < K; ++l) {
    cutoffs[l] = std::min(config.weights[l] * q * scale, config.lambdas[l]);
  }
  for (int k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < m; ++i) {
      bool keep = true;
      for (int l = 0; l < K && keep; ++l) {
        if (l == k) continue;  // membership never looks at group k's own p-values
        keep = local_pc(i, l) <= cutoffs[l];
      }
      if (keep) result.sets[k].push_back(static_cast<int>(i));
    }
  }
  return result;
}

}  // namespace

SelectionResult threshold_selection(const Matrix& local_pc, const TestingConfig& config,
                                    double q) {
  return selection_with_scale(local_pc, config, q, 1.0, "threshold");
}

SelectionResult inflated_threshold_selection(const Matrix& local_pc,
                                             const TestingConfig& config, double q) {
  const double h = harmonic_number(local_pc.rows());
  return selection_with_scale(local_pc, config, q, h > 0.0 ? 1.0 / h : 1.0,
                              "inflated-threshold");
}

double harmonic_number(std::size_t m) {
  double h = 0.0;
  for (std::size_t i = 1; i <= m; ++i) h += 1.0 / static_cast<double>(i);
  return h;
}

}  // namespace parfilter
