#include "parfilter/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>
#include <utility>

#include "dist.hpp"
#include "parfilter/baselines.hpp"
#include "parfilter/engine.hpp"
#include "parfilter/errors.hpp"
#include "parfilter/rng.hpp"
#include "parfilter/weights.hpp"
#include "text_format.hpp"

namespace parfilter {

namespace {

constexpr double kBetaShape2 = 7.0;

void check_scenario(const SimScenario& scenario) {
  if (scenario.m == 0) {
    throw ValidationError("scenario needs at least one feature");
  }
  if (scenario.n < 1) {
    throw ValidationError("scenario needs at least one study");
  }
  if (scenario.u < 1 || scenario.u > scenario.n) {
    throw ValidationError("replicability level u=" + std::to_string(scenario.u) +
                          " must lie in [1, " + std::to_string(scenario.n) + "]");
  }
  if (!(scenario.xi >= 0.0 && scenario.xi < 1.0)) {
    throw ValidationError("signal size xi must lie in [0,1)");
  }
  if (!(scenario.ar1_rho > -1.0 && scenario.ar1_rho < 1.0)) {
    throw ValidationError("AR(1) coefficient must lie in (-1,1)");
  }
  if (scenario.dependence == DependenceKind::ar1 &&
      scenario.family == ScenarioFamily::all_signal) {
    throw ValidationError("the all-signal family is defined for independent draws only");
  }
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

double gamma0(int n) {
  if (n < 1) {
    throw ValidationError("number of studies must be positive");
  }
  const double nd = static_cast<double>(n);
  return std::log(std::pow(0.01 / nd, -1.0 / nd) - 1.0);
}

CovariateSet SimulatedDataset::covariates() const {
  CovariateSet out;
  out.reserve(static_cast<std::size_t>(scenario.n));
  for (int j = 0; j < scenario.n; ++j) out.push_back(x);
  return out;
}

SimulatedDataset generate(const SimScenario& scenario, int replicate) {
  check_scenario(scenario);
  if (replicate < 0) {
    throw ValidationError("replicate index must be non-negative");
  }
  const std::size_t m = scenario.m;
  const int n = scenario.n;
  const auto rep = static_cast<std::uint64_t>(replicate);
  const double shape1 = 1.0 - scenario.xi;

  SimulatedDataset out;
  out.scenario = scenario;
  out.replicate = replicate;
  out.p = Matrix(m, static_cast<std::size_t>(n));
  out.x = Matrix(m, 1);
  out.truth = GroundTruth(m, static_cast<std::size_t>(n));

  if (scenario.family == ScenarioFamily::all_signal) {
    // Constant-zero covariate, every base hypothesis a signal.
    RandomStream pvalues(scenario.seed, rep, 2);
    for (std::size_t i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        out.p(i, static_cast<std::size_t>(j)) =
            dist::beta_quantile(pvalues.uniform(), shape1, kBetaShape2);
      }
    }
    return out;
  }

  RandomStream covariate(scenario.seed, rep, 0);
  for (std::size_t i = 0; i < m; ++i) out.x(i, 0) = covariate.normal();

  RandomStream status(scenario.seed, rep, 1);
  const double intercept = gamma0(n);
  for (std::size_t i = 0; i < m; ++i) {
    const double null_prob = sigmoid(intercept + scenario.gamma1 * out.x(i, 0));
    for (int j = 0; j < n; ++j) {
      out.truth(i, static_cast<std::size_t>(j)) = status.uniform() < null_prob ? 1 : 0;
    }
  }

  if (scenario.dependence == DependenceKind::independent) {
    RandomStream pvalues(scenario.seed, rep, 2);
    for (std::size_t i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        const double v = pvalues.uniform();
        out.p(i, static_cast<std::size_t>(j)) =
            out.truth(i, static_cast<std::size_t>(j)) != 0
                ? v
                : dist::beta_quantile(v, shape1, kBetaShape2);
      }
    }
    return out;
  }

  // AR(1) across features within each study: z_1 ~ N(0,1),
  // z_i = rho*z_{i-1} + sqrt(1-rho^2)*eps_i realizes cor(z_i, z_i') =
  // rho^{|i-i'|} exactly.
  const double rho = scenario.ar1_rho;
  const double innovation = std::sqrt(1.0 - rho * rho);
  for (int j = 0; j < n; ++j) {
    RandomStream chain(scenario.seed, rep, 10 + static_cast<std::uint64_t>(j));
    double z = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double eps = chain.normal();
      z = i == 0 ? eps : rho * z + innovation * eps;
      const double v = dist::normal_cdf(z);
      out.p(i, static_cast<std::size_t>(j)) =
          out.truth(i, static_cast<std::size_t>(j)) != 0
              ? v
              : dist::beta_quantile(v, shape1, kBetaShape2);
    }
  }
  return out;
}

SimulatedDataset generate_figure1(std::size_t m, int n, int replicate, std::uint64_t seed) {
  SimScenario scenario;
  scenario.m = m;
  scenario.n = n;
  scenario.u = n;
  scenario.gamma1 = 0.0;
  scenario.xi = 0.74;  // Beta(0.26, 7) alternative
  scenario.seed = seed;
  scenario.name = "figure1";
  scenario.family = ScenarioFamily::all_signal;
  return generate(scenario, replicate);
}

std::vector<double> oracle_psi(const SimulatedDataset& dataset) {
  const SimScenario& scenario = dataset.scenario;
  check_scenario(scenario);
  if (scenario.dependence != DependenceKind::independent) {
    throw ModeMismatchError(
        "the oracle posterior factorizes over features and is only defined for "
        "independent draws");
  }
  const std::size_t m = dataset.p.rows();
  const int n = scenario.n;
  const double shape1 = 1.0 - scenario.xi;
  const double intercept = gamma0(n);

  std::vector<double> psi(m);
  std::vector<double> omega(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      const double p = std::max(dataset.p(i, static_cast<std::size_t>(j)), 1e-300);
      if (scenario.family == ScenarioFamily::all_signal) {
        omega[static_cast<std::size_t>(j)] = 1.0;
        continue;
      }
      const double null_prob = sigmoid(intercept + scenario.gamma1 * dataset.x(i, 0));
      const double alt_density = dist::beta_pdf(p, shape1, kBetaShape2);
      const double signal_mass = (1.0 - null_prob) * alt_density;
      omega[static_cast<std::size_t>(j)] = signal_mass / (signal_mass + null_prob);
    }
    psi[i] = 1.0 - prob_at_least(omega, scenario.u);
  }
  return psi;
}

ErrorRates fdp_tpp(std::span<const int> rejections, const GroundTruth& truth, int u) {
  const std::size_t m = truth.rows();
  const int n = static_cast<int>(truth.cols());
  if (u < 1 || u > n) {
    throw ValidationError("replicability level u=" + std::to_string(u) +
                          " must lie in [1, " + std::to_string(n) + "]");
  }
  // The PC null holds when fewer than u base nulls are false.
  std::vector<char> pc_null(m);
  std::size_t alternatives = 0;
  for (std::size_t i = 0; i < m; ++i) {
    int true_nulls = 0;
    for (int j = 0; j < n; ++j) {
      if (truth(i, static_cast<std::size_t>(j)) != 0) ++true_nulls;
    }
    pc_null[i] = true_nulls >= n - u + 1 ? 1 : 0;
    if (pc_null[i] == 0) ++alternatives;
  }

  std::size_t false_rejections = 0;
  for (int i : rejections) {
    if (i < 0 || static_cast<std::size_t>(i) >= m) {
      throw ValidationError("rejected feature index " + std::to_string(i) +
                            " is outside [0, " + std::to_string(m) + ")");
    }
    if (pc_null[static_cast<std::size_t>(i)] != 0) ++false_rejections;
  }
  ErrorRates rates;
  rates.fdp = static_cast<double>(false_rejections) /
              static_cast<double>(std::max<std::size_t>(rejections.size(), 1));
  rates.tpp = static_cast<double>(rejections.size() - false_rejections) /
              static_cast<double>(std::max<std::size_t>(alternatives, 1));
  return rates;
}

const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> names = {
      "bh",        "by",
      "adaptive-bh", "cofilter",
      "adaptive-cofilter", "parfilter",
      "parfilter-unit", "parfilter-nonadaptive",
      "parfilter-inflated", "parfilter-dependence",
      "bh-heller", "oracle"};
  return names;
}

std::vector<int> method_rejections(const std::string& method, const Matrix& p,
                                   const CovariateSet& x, int u, Combiner combiner, double q,
                                   const ConfigProvider& config_for) {
  if (method == "bh" || method == "by" || method == "adaptive-bh" || method == "cofilter" ||
      method == "adaptive-cofilter") {
    std::vector<double> pooled(p.rows());
    for (std::size_t i = 0; i < p.rows(); ++i) {
      pooled[i] = partial_conjunction_pvalue(p.row(i), u, combiner);
    }
    if (method == "bh") return bh(pooled, q);
    if (method == "by") return by(pooled, q);
    if (method == "adaptive-bh") return adaptive_bh_storey(pooled, q, 0.5);
    if (method == "cofilter") return cofilter_bh(pooled, q, q);
    return adaptive_cofilter_bh(pooled, q, q, 0.5);
  }
  if (method == "bh-heller") {
    if (p.cols() != 2 || u != 2) {
      throw ValidationError("method 'bh-heller' requires exactly 2 studies and u=2");
    }
    return bogomolov_heller_adaptive(p, q, 0.5, 0.5);
  }
  if (method == "oracle") {
    throw ValidationError(
        "method 'oracle' needs simulation ground truth; run it through an experiment");
  }

  ParFilterOptions options;
  options.combiner = combiner;
  double lambda = 0.5;
  if (method == "parfilter") {
    options.mode = AnalysisMode::independence_adaptive;
    options.weights = WeightMode::model_a;
  } else if (method == "parfilter-unit") {
    options.mode = AnalysisMode::independence_adaptive;
    options.weights = WeightMode::unit;
  } else if (method == "parfilter-nonadaptive") {
    options.mode = AnalysisMode::independence_nonadaptive;
    options.weights = WeightMode::model_a;
    lambda = 1.0;
  } else if (method == "parfilter-dependence") {
    options.mode = AnalysisMode::dependence;
    options.weights = WeightMode::model_b;
    lambda = 1.0;
  } else if (method == "parfilter-inflated") {
    options.mode = AnalysisMode::dependence;
    options.weights = WeightMode::model_b;
    options.inflated_selection = true;
    lambda = 1.0;
  } else {
    throw ValidationError("unknown method '" + method + "'");
  }
  return parfilter(p, x, config_for(lambda), q, options).rejected;
}

namespace {

// Per-replicate evaluation shared by every requested method, with the level
// draw and covariate copies computed once.
class ReplicateEvaluator {
 public:
  ReplicateEvaluator(const ExperimentSpec& spec, int replicate)
      : spec_(spec), dataset_(generate(spec.scenario, replicate)) {}

  ErrorRates evaluate(const std::string& method) {
    return fdp_tpp(rejections_for(method), dataset_.truth, spec_.scenario.u);
  }

 private:
  std::vector<int> rejections_for(const std::string& method) {
    if (method == "oracle") return oracle_rejections(oracle_psi(dataset_), spec_.q);
    return method_rejections(method, dataset_.p, covariates(), spec_.scenario.u,
                             spec_.combiner, spec_.q,
                             [this](double lambda) { return testing_config(lambda); });
  }

  const CovariateSet& covariates() {
    if (covariates_.empty()) covariates_ = dataset_.covariates();
    return covariates_;
  }

  // All parfilter variants share one per-feature level draw so that only the
  // tuning parameters differ between them.
  TestingConfig testing_config(double lambda) {
    const SimScenario& scenario = spec_.scenario;
    if (scenario.u == scenario.n) {
      return max_rep_config(scenario.n, scenario.m, lambda);
    }
    if (scenario.u < 2) {
      throw ValidationError("parfilter methods require a replicability level of at least 2");
    }
    if (level_pairs_.empty()) {
      RandomStream levels(scenario.seed, static_cast<std::uint64_t>(dataset_.replicate), 3);
      // Parity split sizes: 1-based even studies vs odd studies.
      const int size1 = scenario.n / 2;
      const std::vector<std::pair<int, int>> valid =
          valid_two_group_levels(scenario.u, size1, scenario.n - size1);
      level_pairs_.resize(scenario.m);
      for (std::size_t i = 0; i < scenario.m; ++i) {
        level_pairs_[i] = valid[levels.index(valid.size())];
      }
    }
    const TwoGroupLevelRule rule = [this](std::size_t i, std::span<const double>) {
      return level_pairs_[i];
    };
    return two_group_config(scenario.n, scenario.m, scenario.u, rule, nullptr, lambda);
  }

  const ExperimentSpec& spec_;
  SimulatedDataset dataset_;
  CovariateSet covariates_;
  std::vector<std::pair<int, int>> level_pairs_;
};

}  // namespace

std::vector<MetricsRow> run_experiment(const ExperimentSpec& spec) {
  check_scenario(spec.scenario);
  if (spec.reps < 1) {
    throw ValidationError("experiment needs at least one replicate");
  }
  if (!(spec.q > 0.0 && spec.q < 1.0)) {
    throw ValidationError("FDR target q must lie in (0,1)");
  }
  if (spec.methods.empty()) {
    throw ValidationError("experiment needs at least one method");
  }
  const auto& known = known_methods();
  for (const std::string& method : spec.methods) {
    if (std::find(known.begin(), known.end(), method) == known.end()) {
      throw ValidationError("unknown method '" + method + "'");
    }
    if (method == "bh-heller" && (spec.scenario.n != 2 || spec.scenario.u != 2)) {
      throw ValidationError("method 'bh-heller' requires exactly 2 studies and u=2");
    }
    if (method == "oracle" && spec.scenario.dependence != DependenceKind::independent) {
      throw ModeMismatchError(
          "the oracle posterior factorizes over features and is only defined for "
          "independent draws");
    }
  }

  const int reps = spec.reps;
  std::vector<std::vector<ErrorRates>> results(static_cast<std::size_t>(reps));

  int workers = spec.threads > 0 ? spec.threads
                                 : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, reps));

  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  const auto work = [&]() {
    while (!failed.load()) {
      const int rep = next.fetch_add(1);
      if (rep >= reps) break;
      try {
        ReplicateEvaluator evaluator(spec, rep);
        std::vector<ErrorRates> rates;
        rates.reserve(spec.methods.size());
        for (const std::string& method : spec.methods) {
          rates.push_back(evaluator.evaluate(method));
        }
        results[static_cast<std::size_t>(rep)] = std::move(rates);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& thread : pool) thread.join();
  }
  if (error) std::rethrow_exception(error);

  std::vector<MetricsRow> rows;
  rows.reserve(spec.methods.size());
  const double denom = static_cast<double>(reps);
  for (std::size_t idx = 0; idx < spec.methods.size(); ++idx) {
    double fdr = 0.0;
    double tpr = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
      fdr += results[static_cast<std::size_t>(rep)][idx].fdp;
      tpr += results[static_cast<std::size_t>(rep)][idx].tpp;
    }
    fdr /= denom;
    tpr /= denom;
    double fdr_var = 0.0;
    double tpr_var = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
      const ErrorRates& rates = results[static_cast<std::size_t>(rep)][idx];
      fdr_var += (rates.fdp - fdr) * (rates.fdp - fdr);
      tpr_var += (rates.tpp - tpr) * (rates.tpp - tpr);
    }
    MetricsRow row;
    row.scenario = spec.scenario.name;
    row.u = spec.scenario.u;
    row.m = spec.scenario.m;
    row.method = spec.methods[idx];
    row.fdr = fdr;
    row.tpr = tpr;
    if (reps > 1) {
      row.fdr_se = std::sqrt(fdr_var / (denom - 1.0) / denom);
      row.tpr_se = std::sqrt(tpr_var / (denom - 1.0) / denom);
    } else {
      row.fdr_se = std::numeric_limits<double>::quiet_NaN();
      row.tpr_se = std::numeric_limits<double>::quiet_NaN();
    }
    row.reps = reps;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string metrics_tsv(const std::vector<MetricsRow>& rows) {
  std::string out = "scenario\tu\tm\tmethod\tfdr\ttpr\tfdr_se\ttpr_se\treps\n";
  for (const MetricsRow& row : rows) {
    out += row.scenario;
    out += '\t';
    out += std::to_string(row.u);
    out += '\t';
    out += std::to_string(row.m);
    out += '\t';
    out += row.method;
    out += '\t';
    out += text::format_double(row.fdr);
    out += '\t';
    out += text::format_double(row.tpr);
    out += '\t';
    out += text::format_double(row.fdr_se);
    out += '\t';
    out += text::format_double(row.tpr_se);
    out += '\t';
    out += std::to_string(row.reps);
    out += '\n';
  }
  return out;
}

void write_metrics_tsv(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw ValidationError("cannot open '" + path + "' for writing");
  }
  file << metrics_tsv(rows);
  if (!file) {
    throw ValidationError("failed writing '" + path + "'");
  }
}

}  // namespace parfilter
