#include "parfilter/weights.hpp"

#include <algorithm>
#include <cmath>

#include "parfilter/combine.hpp"
#include "parfilter/rng.hpp"
#include "optim.hpp"

namespace parfilter {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double affine(std::span<const double> coef, std::span<const double> x) {
  double z = coef[0];
  for (std::size_t t = 0; t < x.size(); ++t) z += coef[t + 1] * x[t];
  return z;
}

void check_dims(const WorkingModelParams& params, std::span<const double> x) {
  if (params.zeta.size() != params.beta.size() || params.zeta.empty()) {
    throw ValidationError("working-model parameter vectors must share length 1 + d");
  }
  if (params.zeta.size() != x.size() + 1) {
    throw ValidationError("covariate row length " + std::to_string(x.size()) +
                          " does not match parameter dimension " +
                          std::to_string(params.zeta.size() - 1));
  }
}

double clip_p(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError("p-value outside [0,1] in working-model evaluation");
  }
  return std::max(p, kLogClip);
}

}  // namespace

double mixture_density(const WorkingModelParams& params, double p, std::span<const double> x) {
  check_dims(params, x);
  const double pi = sigmoid(affine(params.zeta, x));
  const double k = sigmoid(affine(params.beta, x));
  const double p_clipped = clip_p(p);
  return pi + (1.0 - pi) * (1.0 - k) * std::exp(-k * std::log(p_clipped));
}

double expected_p(const WorkingModelParams& params, std::span<const double> x) {
  check_dims(params, x);
  const double pi = sigmoid(affine(params.zeta, x));
  const double k = sigmoid(affine(params.beta, x));
  return (2.0 * (1.0 - k) + k * pi) / (4.0 - 2.0 * k);
}

double signal_posterior(const WorkingModelParams& params, double p, std::span<const double> x) {
  check_dims(params, x);
  const double pi = sigmoid(affine(params.zeta, x));
  const double k = sigmoid(affine(params.beta, x));
  const double signal_density = (1.0 - k) * std::exp(-k * std::log(clip_p(p)));
  return (1.0 - pi) * signal_density / (pi + (1.0 - pi) * signal_density);
}

double log_likelihood(const WorkingModelParams& params, std::span<const double> p,
                      const Matrix& x, std::vector<double>* grad) {
  if (p.size() != x.rows()) {
    throw ValidationError("p-value and covariate row counts differ");
  }
  const std::size_t d = x.cols();
  if (params.zeta.size() != d + 1 || params.beta.size() != d + 1) {
    throw ValidationError("parameter dimension does not match covariate columns");
  }
  if (grad != nullptr) grad->assign(2 * (d + 1), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const std::span<const double> xi(x.row_data(i), d);
    const double pi = sigmoid(affine(params.zeta, xi));
    const double k = sigmoid(affine(params.beta, xi));
    const double log_p = std::log(clip_p(p[i]));
    const double p_pow = std::exp(-k * log_p);  // p^{-k}
    const double f = pi + (1.0 - pi) * (1.0 - k) * p_pow;
    total += std::log(f);
    if (grad != nullptr) {
      // d f / d pi = 1 - (1-k) p^{-k};  d f / d k = -(1-pi) p^{-k} (1 + (1-k) log p)
      const double g_zeta = (1.0 - (1.0 - k) * p_pow) / f * pi * (1.0 - pi);
      const double g_beta = -(1.0 - pi) * p_pow * (1.0 + (1.0 - k) * log_p) / f * k * (1.0 - k);
      (*grad)[0] += g_zeta;
      (*grad)[d + 1] += g_beta;
      for (std::size_t t = 0; t < d; ++t) {
        (*grad)[1 + t] += g_zeta * xi[t];
        (*grad)[d + 2 + t] += g_beta * xi[t];
      }
    }
  }
  return total;
}

namespace {

constexpr double kParamBound = 20.0;

WorkingModelParams unpack(std::span<const double> theta, std::size_t d) {
  WorkingModelParams params;
  params.zeta.assign(theta.begin(), theta.begin() + d + 1);
  params.beta.assign(theta.begin() + d + 1, theta.end());
  return params;
}

// Mean log-likelihood objective (scale-free tolerances) with its gradient.
optim::Result run_fit(std::span<const double> p, const Matrix& x,
                      std::vector<double> start) {
  const std::size_t d = x.cols();
  const double inv_count = 1.0 / static_cast<double>(p.size());
  const optim::Objective objective = [&](std::span<const double> theta,
                                         std::vector<double>& grad) {
    const WorkingModelParams params = unpack(theta, d);
    const double value = log_likelihood(params, p, x, &grad);
    for (double& g : grad) g *= inv_count;
    return value * inv_count;
  };
  return optim::maximize(objective, std::move(start), -kParamBound, kParamBound);
}

// Intercept-only fit: optimize (zeta_0, beta_0) with slopes pinned at zero.
optim::Result run_intercept_fit(std::span<const double> p) {
  const Matrix no_covariates(p.size(), 0);
  return run_fit(p, no_covariates, {0.0, 0.0});
}

}  // namespace

FitReport fit_working_model(std::span<const double> p, const Matrix& x) {
  const std::size_t d = x.cols();
  const std::size_t minimum = std::max<std::size_t>(10, 2 * (d + 1));
  if (p.size() < minimum) {
    throw ValidationError("working-model fit needs at least " + std::to_string(minimum) +
                          " observations, got " + std::to_string(p.size()));
  }
  if (x.rows() != p.size()) {
    throw ValidationError("p-value and covariate row counts differ");
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0 && p[i] <= 1.0)) {
      throw ValidationError("p-value at row " + std::to_string(i + 1) + " outside [0,1]");
    }
  }

  const std::size_t dim = 2 * (d + 1);
  const optim::Result intercept = run_intercept_fit(p);
  std::vector<std::vector<double>> starts;
  std::vector<double> warm(dim, 0.0);
  warm[0] = intercept.x[0];
  warm[d + 1] = intercept.x[1];
  starts.push_back(warm);
  RandomStream restart_stream(0x9A9, 0, 0);
  for (int r = 0; r < 3; ++r) {
    std::vector<double> s(dim);
    for (double& v : s) v = restart_stream.normal();
    starts.push_back(std::move(s));
  }

  bool have_best = false;
  optim::Result best{};
  for (auto& start : starts) {
    optim::Result fit = run_fit(p, x, std::move(start));
    if (fit.converged && (!have_best || fit.value > best.value)) {
      best = fit;
      have_best = true;
    }
  }

  FitReport report;
  if (!have_best) {
    // Restart budget exhausted without convergence: keep the intercept-only
    // optimum with zero slopes and flag it.
    report.intercept_only = true;
    std::vector<double> theta(dim, 0.0);
    theta[0] = intercept.x[0];
    theta[d + 1] = intercept.x[1];
    report.params = unpack(theta, d);
    report.converged = intercept.converged;
    report.grad_norm = intercept.grad_inf;
    report.iterations = intercept.iterations;
    report.log_likelihood = intercept.value * static_cast<double>(p.size());
  } else {
    report.params = unpack(best.x, d);
    report.converged = true;
    report.grad_norm = best.grad_inf;
    report.iterations = best.iterations;
    report.log_likelihood = best.value * static_cast<double>(p.size());
    for (double v : best.x) {
      if (std::abs(v) >= kParamBound - 0.5) report.at_bound = true;
    }
  }
  return report;
}

double prob_at_least(std::span<const double> marginals, int v) {
  if (static_cast<int>(marginals.size()) > kEnumerationLimit) {
    throw ValidationError("at most " + std::to_string(kEnumerationLimit) +
                          " studies supported, got " + std::to_string(marginals.size()));
  }
  for (double w : marginals) {
    if (!(w >= 0.0 && w <= 1.0)) {
      throw ValidationError("event probabilities must lie in [0,1]");
    }
  }
  if (v <= 0) return 1.0;
  if (v > static_cast<int>(marginals.size())) {
    throw ValidationError("level " + std::to_string(v) + " exceeds the study count " +
                          std::to_string(marginals.size()));
  }
  // Exact count distribution by dynamic programming.
  std::vector<double> count_prob(marginals.size() + 1, 0.0);
  count_prob[0] = 1.0;
  std::size_t filled = 0;
  for (double w : marginals) {
    ++filled;
    for (std::size_t c = filled; c >= 1; --c) {
      count_prob[c] = count_prob[c] * (1.0 - w) + count_prob[c - 1] * w;
    }
    count_prob[0] *= 1.0 - w;
  }
  double tail = 0.0;
  for (std::size_t c = static_cast<std::size_t>(v); c < count_prob.size(); ++c) {
    tail += count_prob[c];
  }
  return std::min(tail, 1.0);
}

double replication_posterior(const std::vector<WorkingModelParams>& params,
                             const std::vector<double>& pvalues,
                             const std::vector<std::vector<double>>& xrows, int v) {
  if (params.size() != pvalues.size() || params.size() != xrows.size()) {
    throw ValidationError("per-study inputs must have equal lengths");
  }
  std::vector<double> marginals(params.size());
  for (std::size_t j = 0; j < params.size(); ++j) {
    marginals[j] = signal_posterior(params[j], pvalues[j], xrows[j]);
  }
  return prob_at_least(marginals, v);
}

std::vector<double> normalized_weights(std::span<const double> raw, bool* fell_back) {
  if (fell_back != nullptr) *fell_back = false;
  std::vector<double> nu(raw.begin(), raw.end());
  double sum = 0.0;
  for (double w : nu) {
    if (!(w >= 0.0)) {
      throw ValidationError("raw weights must be non-negative");
    }
    sum += w;
  }
  if (sum <= 0.0) {
    if (fell_back != nullptr) *fell_back = true;
    std::fill(nu.begin(), nu.end(), 1.0);
    return nu;
  }
  const double scale = static_cast<double>(nu.size()) / sum;
  for (double& w : nu) w *= scale;
  return nu;
}

namespace {

void check_weight_inputs(const Matrix& p, const CovariateSet& x,
                         const SelectionResult& selection, const TestingConfig& config) {
  validate_config(config);
  const std::size_t m = p.rows();
  if (p.cols() != static_cast<std::size_t>(config.n) || m != config.feature_count()) {
    throw ValidationError("p-value matrix dimensions do not match the configuration");
  }
  if (x.size() != static_cast<std::size_t>(config.n)) {
    throw ValidationError("expected one covariate matrix per study");
  }
  for (const Matrix& xj : x) {
    if (xj.rows() != m) {
      throw ValidationError("covariate matrices must have one row per feature");
    }
  }
  if (static_cast<int>(selection.sets.size()) != config.group_count()) {
    throw ValidationError("selection has a different group count than the configuration");
  }
  for (const auto& set : selection.sets) {
    for (int i : set) {
      if (i < 0 || static_cast<std::size_t>(i) >= m) {
        throw ValidationError("selection references a feature outside the data");
      }
    }
  }
}

void scatter_normalized(Matrix& nu, const std::vector<int>& selected,
                        std::span<const double> raw, int k,
                        std::vector<std::string>& warnings) {
  bool fell_back = false;
  const std::vector<double> scaled = normalized_weights(raw, &fell_back);
  if (fell_back) {
    warnings.push_back("group " + std::to_string(k + 1) +
                       ": trained weights were all zero; fell back to unit weights");
  }
  for (std::size_t t = 0; t < selected.size(); ++t) {
    nu(selected[t], k) = scaled[t];
  }
}

}  // namespace

LocalWeights unit_weights(const SelectionResult& selection, std::size_t m) {
  LocalWeights weights;
  weights.mode = "unit";
  weights.nu = Matrix(m, selection.sets.size(), 0.0);
  for (std::size_t k = 0; k < selection.sets.size(); ++k) {
    for (int i : selection.sets[k]) weights.nu(i, k) = 1.0;
  }
  return weights;
}

LocalWeights model_a_weights(const Matrix& p, const CovariateSet& x,
                             const SelectionResult& selection, const TestingConfig& config) {
  check_weight_inputs(p, x, selection, config);
  const std::size_t m = p.rows();
  const int K = config.group_count();
  LocalWeights weights;
  weights.mode = "model-a";
  weights.nu = Matrix(m, K, 0.0);

  for (int k = 0; k < K; ++k) {
    const std::vector<int>& selected = selection.sets[k];
    if (selected.empty()) {
      weights.warnings.push_back("group " + std::to_string(k + 1) +
                                 ": selection is empty; no weights trained");
      continue;
    }
    // Training features: everything the selection left out.
    std::vector<std::uint8_t> in_selection(m, 0);
    for (int i : selected) in_selection[i] = 1;
    std::vector<std::size_t> train_rows;
    for (std::size_t i = 0; i < m; ++i) {
      if (!in_selection[i]) train_rows.push_back(i);
    }

    std::vector<WorkingModelParams> inflated;
    inflated.reserve(config.groups[k].size());
    for (int j : config.groups[k]) {
      const std::size_t d = x[j].cols();
      std::vector<std::size_t> rows = train_rows;
      if (rows.size() < std::max<std::size_t>(10, 2 * (d + 1))) {
        weights.warnings.push_back(
            "group " + std::to_string(k + 1) + ", study " + std::to_string(j + 1) +
            ": too few non-selected features to train on; trained on all features "
            "(selected-out guarantee weakened)");
        rows.resize(m);
        for (std::size_t i = 0; i < m; ++i) rows[i] = i;
      }
      std::vector<double> p_train(rows.size());
      Matrix x_train(rows.size(), d);
      for (std::size_t t = 0; t < rows.size(); ++t) {
        p_train[t] = p(rows[t], j);
        for (std::size_t c = 0; c < d; ++c) x_train(t, c) = x[j](rows[t], c);
      }
      FitReport fit = fit_working_model(p_train, x_train);
      fit.study = j;
      fit.group = k;
      if (fit.intercept_only) {
        weights.warnings.push_back("group " + std::to_string(k + 1) + ", study " +
                                   std::to_string(j + 1) +
                                   ": working-model fit fell back to intercept-only");
      }
      WorkingModelParams tilted = fit.params;
      for (double& z : tilted.zeta) z *= 1.5;  // deliberate null-probability inflation
      inflated.push_back(std::move(tilted));
      weights.fits.push_back(std::move(fit));
    }

    // Score selected features with the model's own expected p-value plugged
    // in, so the weights depend on the data only through the fits above.
    std::vector<double> raw(selected.size());
    for (std::size_t t = 0; t < selected.size(); ++t) {
      const int i = selected[t];
      std::vector<double> marginals(inflated.size());
      for (std::size_t a = 0; a < inflated.size(); ++a) {
        const int j = config.groups[k][a];
        const std::span<const double> xi(x[j].row_data(i), x[j].cols());
        const double plug_in = expected_p(inflated[a], xi);
        marginals[a] = signal_posterior(inflated[a], plug_in, xi);
      }
      raw[t] = prob_at_least(marginals, config.levels(i, k));
    }
    scatter_normalized(weights.nu, selected, raw, k, weights.warnings);
  }
  return weights;
}

LocalWeights model_b_weights(const Matrix& p, const CovariateSet& x,
                             const SelectionResult& selection, const TestingConfig& config) {
  check_weight_inputs(p, x, selection, config);
  const std::size_t m = p.rows();
  const int n = config.n;
  const int K = config.group_count();
  LocalWeights weights;
  weights.mode = "model-b";
  weights.nu = Matrix(m, K, 0.0);

  // One fit per study on all features; groups share them.
  std::vector<WorkingModelParams> params(n);
  for (int j = 0; j < n; ++j) {
    std::vector<double> p_col(m);
    for (std::size_t i = 0; i < m; ++i) p_col[i] = p(i, j);
    FitReport fit = fit_working_model(p_col, x[j]);
    fit.study = j;
    if (fit.intercept_only) {
      weights.warnings.push_back("study " + std::to_string(j + 1) +
                                 ": working-model fit fell back to intercept-only");
    }
    params[j] = fit.params;
    weights.fits.push_back(std::move(fit));
  }

  // Per-study signal posteriors at the plug-in expected p-value; these only
  // involve each study's own fit and covariates.
  Matrix posterior(m, n, 0.0);
  for (int j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      const std::span<const double> xi(x[j].row_data(i), x[j].cols());
      const double plug_in = expected_p(params[j], xi);
      posterior(i, j) = signal_posterior(params[j], plug_in, xi);
    }
  }

  for (int k = 0; k < K; ++k) {
    const std::vector<int>& selected = selection.sets[k];
    if (selected.empty()) {
      weights.warnings.push_back("group " + std::to_string(k + 1) +
                                 ": selection is empty; no weights trained");
      continue;
    }
    std::vector<int> complement;
    std::vector<std::uint8_t> in_group(n, 0);
    for (int j : config.groups[k]) in_group[j] = 1;
    for (int j = 0; j < n; ++j) {
      if (!in_group[j]) complement.push_back(j);
    }
    std::vector<double> raw(selected.size());
    std::vector<double> marginals(complement.size());
    for (std::size_t t = 0; t < selected.size(); ++t) {
      const int i = selected[t];
      for (std::size_t a = 0; a < complement.size(); ++a) {
        marginals[a] = posterior(i, complement[a]);
      }
      // Replication must still be achievable outside group k at the residual
      // level u - u_ik; level zero means no outside support is needed.
      raw[t] = prob_at_least(marginals, config.u - config.levels(i, k));
    }
    scatter_normalized(weights.nu, selected, raw, k, weights.warnings);
  }
  return weights;
}

}  // namespace parfilter
