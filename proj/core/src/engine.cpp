#include "parfilter/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>

#include "parfilter/errors.hpp"

namespace parfilter {

namespace {

PiMode pi_mode_for(AnalysisMode mode) {
  switch (mode) {
    case AnalysisMode::independence_adaptive: return PiMode::adaptive;
    case AnalysisMode::independence_nonadaptive: return PiMode::one;
    case AnalysisMode::dependence: return PiMode::harmonic;
  }
  throw ValidationError("invalid analysis mode enum value");
}

void check_matrix_shape(const Matrix& p, const TestingConfig& config) {
  if (p.rows() != config.feature_count()) {
    throw ValidationError("p-value matrix has " + std::to_string(p.rows()) +
                          " rows but the configuration describes " +
                          std::to_string(config.feature_count()) + " features");
  }
  if (p.cols() != static_cast<std::size_t>(config.n)) {
    throw ValidationError("p-value matrix has " + std::to_string(p.cols()) +
                          " columns but the configuration describes " +
                          std::to_string(config.n) + " studies");
  }
}

void check_covariates(const CovariateSet& x, std::size_t m, int n) {
  if (x.size() != static_cast<std::size_t>(n)) {
    throw ValidationError("expected one covariate matrix per study (" + std::to_string(n) +
                          "), got " + std::to_string(x.size()));
  }
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j].rows() != m) {
      throw ValidationError("covariate matrix for study " + std::to_string(j + 1) + " has " +
                            std::to_string(x[j].rows()) + " rows; expected " +
                            std::to_string(m));
    }
  }
}

// Rejects option combinations whose finite-sample FDR control is not covered
// by the stated guarantees, unless allow_unproven turns them into warnings.
void check_mode(const TestingConfig& config, const ParFilterOptions& options,
                std::vector<std::string>& warnings) {
  const std::string mode = analysis_mode_name(options.mode);
  if (options.mode == AnalysisMode::independence_adaptive) {
    for (std::size_t k = 0; k < config.lambdas.size(); ++k) {
      if (!(config.lambdas[k] > 0.0 && config.lambdas[k] < 1.0)) {
        throw ModeMismatchError(mode + " mode requires lambda in (0,1) for every group; group " +
                                std::to_string(k + 1) + " has lambda=" +
                                std::to_string(config.lambdas[k]));
      }
    }
  } else {
    for (std::size_t k = 0; k < config.lambdas.size(); ++k) {
      if (config.lambdas[k] != 1.0) {
        throw ModeMismatchError(mode + " mode requires lambda = 1 for every group; group " +
                                std::to_string(k + 1) + " has lambda=" +
                                std::to_string(config.lambdas[k]));
      }
    }
  }

  const bool unproven_weights =
      options.mode == AnalysisMode::dependence
          ? options.weights == WeightMode::model_a
          : options.weights == WeightMode::model_b;
  if (unproven_weights) {
    const std::string admitted = options.mode == AnalysisMode::dependence
                                     ? "weights trained without the group's own p-values "
                                       "(model-b) or unit weights"
                                     : "model-a or unit weights";
    if (!options.allow_unproven) {
      throw ModeMismatchError(mode + " mode admits " + admitted + "; " +
                              weight_mode_name(options.weights) +
                              " weights have no stated guarantee here (set allow_unproven "
                              "to run them anyway)");
    }
    warnings.push_back("running " + weight_mode_name(options.weights) + " weights in " + mode +
                       " mode: FDR control is not covered by the stated guarantees");
  }
}

void check_selection_shape(const SelectionResult& selection, std::size_t m, std::size_t groups) {
  if (selection.sets.size() != groups) {
    throw ValidationError("selection carries " + std::to_string(selection.sets.size()) +
                          " groups but the configuration describes " + std::to_string(groups));
  }
  for (std::size_t k = 0; k < selection.sets.size(); ++k) {
    const auto& set = selection.sets[k];
    for (std::size_t idx = 0; idx < set.size(); ++idx) {
      if (set[idx] < 0 || static_cast<std::size_t>(set[idx]) >= m) {
        throw ValidationError("selection for group " + std::to_string(k + 1) +
                              " references feature index " + std::to_string(set[idx]) +
                              " outside [0, " + std::to_string(m) + ")");
      }
      if (idx > 0 && set[idx] <= set[idx - 1]) {
        throw ValidationError("selection for group " + std::to_string(k + 1) +
                              " must be strictly increasing");
      }
    }
  }
}

RejectionReport run_with_selection(const Matrix& p, const CovariateSet& x,
                                   const TestingConfig& config, double q,
                                   const ParFilterOptions& options, SelectionResult selection,
                                   Matrix local_pc) {
  const std::size_t m = p.rows();
  const std::size_t groups = config.group_count();

  std::vector<std::string> warnings;
  check_mode(config, options, warnings);
  if (!selection.condition_compliant) {
    warnings.push_back("selection rule '" + selection.rule +
                       "' is not covered by the stated guarantees");
  }

  LocalWeights weights;
  switch (options.weights) {
    case WeightMode::unit:
      weights = unit_weights(selection, m);
      break;
    case WeightMode::model_a:
      check_covariates(x, m, config.n);
      weights = model_a_weights(p, x, selection, config);
      break;
    case WeightMode::model_b:
      check_covariates(x, m, config.n);
      weights = model_b_weights(p, x, selection, config);
      break;
  }
  warnings.insert(warnings.end(), weights.warnings.begin(), weights.warnings.end());

  const PiMode pi_mode = pi_mode_for(options.mode);
  std::vector<double> pi_hat(groups);
  for (std::size_t k = 0; k < groups; ++k) {
    pi_hat[k] = null_proportion_estimate(pi_mode, local_pc, static_cast<int>(k),
                                         selection.sets[k], weights.nu, config.lambdas[k],
                                         &warnings);
    if (selection.sets[k].empty()) {
      warnings.push_back("group " + std::to_string(k + 1) +
                         " selected no features; the rejection set is empty");
    }
  }

  ThresholdResult thresholds =
      compute_thresholds(local_pc, selection, weights.nu, pi_hat, config, q);
  std::vector<int> rejected =
      rejection_set(thresholds.t, local_pc, selection, weights.nu, config.lambdas);

  RejectionReport report;
  report.rejected = std::move(rejected);
  report.t_hat = std::move(thresholds.t);
  report.selection = std::move(selection);
  report.weights = std::move(weights);
  report.pi_hat = std::move(pi_hat);
  report.local_pc = std::move(local_pc);
  report.config = config;
  report.options = options;
  report.q = q;
  report.sweeps = thresholds.sweeps;
  report.warnings = std::move(warnings);

  verify_report(report);
  return report;
}

}  // namespace

WeightMode weight_mode_from_name(const std::string& name) {
  if (name == "model-a" || name == "model_a") return WeightMode::model_a;
  if (name == "model-b" || name == "model_b") return WeightMode::model_b;
  if (name == "unit") return WeightMode::unit;
  throw ValidationError("unknown weight mode '" + name +
                        "' (expected model-a, model-b or unit)");
}

std::string weight_mode_name(WeightMode mode) {
  switch (mode) {
    case WeightMode::model_a: return "model-a";
    case WeightMode::model_b: return "model-b";
    case WeightMode::unit: return "unit";
  }
  throw ValidationError("invalid weight mode enum value");
}

AnalysisMode analysis_mode_from_name(const std::string& name) {
  if (name == "independence-adaptive" || name == "indep-adaptive") {
    return AnalysisMode::independence_adaptive;
  }
  if (name == "independence-nonadaptive" || name == "indep-nonadaptive") {
    return AnalysisMode::independence_nonadaptive;
  }
  if (name == "dependence") return AnalysisMode::dependence;
  throw ValidationError("unknown analysis mode '" + name +
                        "' (expected indep-adaptive, indep-nonadaptive or dependence)");
}

std::string analysis_mode_name(AnalysisMode mode) {
  switch (mode) {
    case AnalysisMode::independence_adaptive: return "independence-adaptive";
    case AnalysisMode::independence_nonadaptive: return "independence-nonadaptive";
    case AnalysisMode::dependence: return "dependence";
  }
  throw ValidationError("invalid analysis mode enum value");
}

Matrix local_pc_pvalues(const Matrix& p, const TestingConfig& config, Combiner combiner) {
  validate_config(config);
  check_matrix_shape(p, config);
  for (std::size_t i = 0; i < p.rows(); ++i) {
    for (std::size_t j = 0; j < p.cols(); ++j) {
      if (!(p(i, j) >= 0.0 && p(i, j) <= 1.0)) {  // also catches NaN
        throw ValidationError("base p-value at feature " + std::to_string(i + 1) + ", study " +
                              std::to_string(j + 1) + " is outside [0,1]");
      }
    }
  }

  const std::size_t m = p.rows();
  const std::size_t groups = config.group_count();
  Matrix out(m, groups);
  std::vector<double> values;
  for (std::size_t k = 0; k < groups; ++k) {
    const auto& members = config.groups[k];
    if (members.size() == 1) {
      // Level is forced to 1, and every combiner maps a single p-value to
      // itself: the column is the base column.
      for (std::size_t i = 0; i < m; ++i) out(i, k) = p(i, members[0]);
      continue;
    }
    values.resize(members.size());
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < members.size(); ++j) values[j] = p(i, members[j]);
      out(i, k) = partial_conjunction_pvalue(values, config.levels(i, k), combiner);
    }
  }
  return out;
}

double null_proportion_estimate(PiMode mode, const Matrix& local_pc, int k,
                                const std::vector<int>& selected, const Matrix& nu,
                                double lambda, std::vector<std::string>* warnings) {
  switch (mode) {
    case PiMode::one:
      return 1.0;
    case PiMode::harmonic:
      return harmonic_number(std::max<std::size_t>(selected.size(), 1));
    case PiMode::adaptive: {
      if (!(lambda > 0.0 && lambda < 1.0)) {
        throw ModeMismatchError(
            "the adaptive null-proportion estimate requires lambda in (0,1); group " +
            std::to_string(k + 1) + " has lambda=" + std::to_string(lambda));
      }
      if (selected.empty()) {
        if (warnings != nullptr) {
          warnings->push_back("group " + std::to_string(k + 1) +
                              " selected no features; its null-proportion estimate is 0");
        }
        return 0.0;
      }
      double max_nu = 0.0;
      double tail = 0.0;
      for (int i : selected) {
        max_nu = std::max(max_nu, nu(i, k));
        if (local_pc(i, k) > lambda) tail += nu(i, k);
      }
      return (max_nu + tail) / ((1.0 - lambda) * static_cast<double>(selected.size()));
    }
  }
  throw ValidationError("invalid null-proportion mode enum value");
}

std::vector<int> rejection_set(std::span<const double> t, const Matrix& local_pc,
                               const SelectionResult& selection, const Matrix& nu,
                               std::span<const double> lambdas) {
  const std::size_t m = local_pc.rows();
  const std::size_t groups = selection.sets.size();
  if (t.size() != groups || lambdas.size() != groups) {
    throw ValidationError("threshold and lambda vectors must have one entry per group");
  }
  std::vector<int> pass_count(m, 0);
  for (std::size_t k = 0; k < groups; ++k) {
    for (int i : selection.sets[k]) {
      if (local_pc(i, k) <= std::min(nu(i, k) * t[k], lambdas[k])) ++pass_count[i];
    }
  }
  std::vector<int> rejected;
  for (std::size_t i = 0; i < m; ++i) {
    if (pass_count[i] == static_cast<int>(groups)) rejected.push_back(static_cast<int>(i));
  }
  return rejected;
}

double estimated_fdp(double t_k, std::size_t rejection_count, std::size_t selection_size,
                     double pi_k) {
  return static_cast<double>(selection_size) * pi_k * t_k /
         static_cast<double>(std::max<std::size_t>(rejection_count, 1));
}

ThresholdResult compute_thresholds(const Matrix& local_pc, const SelectionResult& selection,
                                   const Matrix& nu, std::span<const double> pi,
                                   const TestingConfig& config, double q) {
  const std::size_t m = local_pc.rows();
  const std::size_t groups = config.group_count();
  check_selection_shape(selection, m, groups);
  if (pi.size() != groups) {
    throw ValidationError("null-proportion vector must have one entry per group");
  }

  ThresholdResult out;
  out.t.assign(groups, 0.0);
  // An empty selected set empties the intersection: nothing is rejectable.
  for (const auto& set : selection.sets) {
    if (set.empty()) return out;
  }

  // Largest feasible threshold per group is r * c_k for the achieved
  // rejection count r, where c_k prices one rejection.
  std::vector<double> budget(groups);
  std::size_t total_selected = 0;
  for (std::size_t k = 0; k < groups; ++k) {
    if (!(pi[k] > 0.0)) {
      throw ValidationError("null-proportion estimate for group " + std::to_string(k + 1) +
                            " must be positive when its selection is nonempty");
    }
    budget[k] =
        config.weights[k] * q / (static_cast<double>(selection.sets[k].size()) * pi[k]);
    total_selected += selection.sets[k].size();
  }

  std::vector<std::size_t> r(groups);
  std::vector<double> t(groups);
  for (std::size_t k = 0; k < groups; ++k) {
    r[k] = selection.sets[k].size();
    t[k] = static_cast<double>(r[k]) * budget[k];
  }

  // Gauss-Seidel descent from the top: each group's count of achievable
  // rejections can only shrink as other thresholds shrink, so every r_k is
  // non-increasing and the sweep terminates.
  const int max_sweeps = static_cast<int>(total_selected) + static_cast<int>(groups) + 2;
  int sweeps = 0;
  bool changed = true;
  while (changed) {
    if (++sweeps > max_sweeps) {
      throw NumericError("threshold search failed to converge after " +
                         std::to_string(sweeps) + " sweeps");
    }
    changed = false;
    for (std::size_t k = 0; k < groups; ++k) {
      // Features eligible in every group but k at the current thresholds.
      std::vector<int> other_pass(m, 0);
      for (std::size_t l = 0; l < groups; ++l) {
        if (l == k) continue;
        for (int i : selection.sets[l]) {
          if (local_pc(i, l) <= std::min(nu(i, l) * t[l], config.lambdas[l])) ++other_pass[i];
        }
      }
      // Candidates within group k; nu = 0 features only ever pass at p = 0.
      std::vector<double> cand_p;
      std::vector<double> cand_nu;
      cand_p.reserve(selection.sets[k].size());
      cand_nu.reserve(selection.sets[k].size());
      std::size_t always_in = 0;
      for (int i : selection.sets[k]) {
        if (other_pass[i] != static_cast<int>(groups) - 1) continue;
        const double p_ik = local_pc(i, k);
        if (!(p_ik <= config.lambdas[k])) continue;
        const double nu_ik = nu(i, k);
        if (nu_ik > 0.0) {
          cand_p.push_back(p_ik);
          cand_nu.push_back(nu_ik);
        } else if (p_ik <= 0.0) {
          ++always_in;
        }
      }
      const auto count_at = [&](double trial) {
        std::size_t count = always_in;
        for (std::size_t idx = 0; idx < cand_p.size(); ++idx) {
          if (cand_p[idx] <= cand_nu[idx] * trial) ++count;
        }
        return count;
      };
      // Scan candidate rejection counts downward; counts between the trial
      // value and the achieved count cannot succeed either, so jump.
      std::size_t r_k = r[k];
      while (true) {
        const std::size_t achieved =
            std::max<std::size_t>(count_at(static_cast<double>(r_k) * budget[k]), 1);
        if (achieved >= r_k) break;
        r_k = achieved;
      }
      if (r_k != r[k]) {
        r[k] = r_k;
        changed = true;
      }
      t[k] = static_cast<double>(r[k]) * budget[k];
    }
  }

  out.t = std::move(t);
  out.sweeps = sweeps;
  return out;
}

RejectionReport parfilter(const Matrix& p, const CovariateSet& x, const TestingConfig& config,
                          double q, const ParFilterOptions& options) {
  if (!(q > 0.0 && q < 1.0)) {
    throw ValidationError("FDR target q must lie in (0,1)");
  }
  validate_config(config);
  check_matrix_shape(p, config);

  Matrix local_pc = local_pc_pvalues(p, config, options.combiner);
  SelectionResult selection = options.inflated_selection
                                  ? inflated_threshold_selection(local_pc, config, q)
                                  : threshold_selection(local_pc, config, q);
  return run_with_selection(p, x, config, q, options, std::move(selection),
                            std::move(local_pc));
}

RejectionReport parfilter_with_selection(const Matrix& p, const CovariateSet& x,
                                         const TestingConfig& config, double q,
                                         const ParFilterOptions& options,
                                         const SelectionResult& selection) {
  if (!(q > 0.0 && q < 1.0)) {
    throw ValidationError("FDR target q must lie in (0,1)");
  }
  validate_config(config);
  check_matrix_shape(p, config);
  check_selection_shape(selection, p.rows(), config.group_count());
  if (!selection.condition_compliant && !options.allow_unproven) {
    throw ModeMismatchError("selection rule '" + selection.rule +
                            "' is not marked compliant with the selection conditions; set "
                            "allow_unproven to use it without a stated guarantee");
  }

  Matrix local_pc = local_pc_pvalues(p, config, options.combiner);
  return run_with_selection(p, x, config, q, options, selection, std::move(local_pc));
}

std::vector<int> posthoc_rejections(const RejectionReport& report, const Matrix& p,
                                    int study, double q_j) {
  if (study < 0 || study >= report.config.n) {
    throw ValidationError("study index " + std::to_string(study + 1) + " is out of range [1, " +
                          std::to_string(report.config.n) + "]");
  }
  if (!(q_j > 0.0 && q_j < 1.0)) {
    throw ValidationError("per-study FDR target must lie in (0,1)");
  }
  check_matrix_shape(p, report.config);

  // Group holding this study.
  const auto groups = static_cast<std::size_t>(report.config.group_count());
  std::size_t k = groups;
  for (std::size_t g = 0; g < groups; ++g) {
    const auto& members = report.config.groups[g];
    if (std::find(members.begin(), members.end(), study) != members.end()) {
      k = g;
      break;
    }
  }
  if (k == groups) {
    throw ValidationError("study " + std::to_string(study + 1) + " belongs to no group");
  }

  const auto& selected = report.selection.sets[k];
  const double size = static_cast<double>(selected.size());

  // Base p-values of this study over the already-rejected features, sorted so
  // |R_j(tau)| is a binary search away.
  std::vector<double> rejected_p;
  rejected_p.reserve(report.rejected.size());
  for (int i : report.rejected) rejected_p.push_back(p(i, study));
  std::sort(rejected_p.begin(), rejected_p.end());

  // tau only needs to range over this study's selected p-values.
  double tau_hat = -1.0;
  for (int i : selected) {
    const double tau = p(i, study);
    const auto covered = static_cast<std::size_t>(
        std::upper_bound(rejected_p.begin(), rejected_p.end(), tau) - rejected_p.begin());
    const double fdp = size * tau / static_cast<double>(std::max<std::size_t>(covered, 1));
    if (fdp <= q_j) tau_hat = std::max(tau_hat, tau);
  }
  if (tau_hat < 0.0) return {};

  std::vector<int> out;
  for (int i : report.rejected) {
    if (p(i, study) <= tau_hat) out.push_back(i);
  }
  return out;
}

void verify_report(const RejectionReport& report) {
  const std::size_t groups = report.config.group_count();
  const std::size_t rej = report.rejected.size();

  const std::vector<int> recomputed =
      rejection_set(report.t_hat, report.local_pc, report.selection, report.weights.nu,
                    report.config.lambdas);
  if (recomputed != report.rejected) {
    throw NumericError("rejection set does not match its thresholds");
  }

  for (std::size_t k = 0; k < groups; ++k) {
    const std::size_t sel = report.selection.sets[k].size();
    const double share = report.config.weights[k] * report.q;

    const double fdp = estimated_fdp(report.t_hat[k], rej, sel, report.pi_hat[k]);
    if (fdp > share + 1e-12) {
      throw NumericError("estimated FDP " + std::to_string(fdp) + " for group " +
                         std::to_string(k + 1) + " exceeds its budget " +
                         std::to_string(share));
    }

    if (rej > 0) {
      const double expected = static_cast<double>(rej) * share /
                              (static_cast<double>(sel) * report.pi_hat[k]);
      if (std::abs(report.t_hat[k] - expected) >
          1e-12 * std::max(1.0, std::abs(expected))) {
        throw NumericError("threshold for group " + std::to_string(k + 1) +
                           " violates the fixed-point identity: t=" +
                           std::to_string(report.t_hat[k]) + ", expected " +
                           std::to_string(expected));
      }
    }

    const double scale = static_cast<double>(std::max<std::size_t>(rej, 1)) * share /
                         (static_cast<double>(std::max<std::size_t>(sel, 1)) *
                          report.pi_hat[k]);
    for (int i : report.rejected) {
      const double cap = report.weights.nu(i, k) * scale;
      if (report.local_pc(i, k) > cap + 1e-12) {
        throw NumericError("rejected feature " + std::to_string(i + 1) +
                           " violates self-consistency in group " + std::to_string(k + 1));
      }
    }
  }
}

}  // namespace parfilter
