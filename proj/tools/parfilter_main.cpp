// Command-line surface: ingest CSV data, run the replicability analysis or
// its competitors, drive simulation experiments, and expand spline bases.
// Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 mode
// mismatch.
#include <algorithm>
#include <charconv>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "parfilter/baselines.hpp"
#include "parfilter/combine.hpp"
#include "parfilter/config.hpp"
#include "parfilter/engine.hpp"
#include "parfilter/errors.hpp"
#include "parfilter/io.hpp"
#include "parfilter/sim.hpp"
#include "parfilter/spline.hpp"

namespace {

namespace pf = parfilter;
namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(double value) {
  char buffer[40];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw pf::ValidationError("cannot open '" + path.string() + "' for writing");
  }
  file << body;
  if (!file) {
    throw pf::ValidationError("failed writing '" + path.string() + "'");
  }
}

struct AnalyzeArgs {
  std::string pvalues;
  std::vector<std::string> covariates;
  std::string config_path;
  int u = 0;  // 0 = maximum replicability (u = n)
  double q = 0.05;
  std::string mode = "indep-adaptive";
  std::string weights = "model-a";
  std::string combiner = "stouffer";
  double lambda = -1.0;  // <0 = mode default (0.5 adaptive, 1 otherwise)
  std::uint64_t seed = 0;
  bool allow_unproven = false;
  std::vector<int> posthoc_studies;  // 1-based
  double posthoc_q = 0.0;            // 0 = per-study share w_k(j) * q
  std::string out = ".";
};

struct SimulateArgs {
  std::string preset;
  std::string scenario_path;
  int reps = 0;  // 0 = preset/scenario default
  std::vector<std::string> methods;
  double q = 0.05;
  std::string combiner = "stouffer";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 0;
  std::string out = ".";
};

struct CompareArgs {
  std::string pvalues;
  std::vector<std::string> covariates;
  std::string config_path;
  int u = 0;
  std::vector<std::string> methods = {"bh", "by", "adaptive-bh", "cofilter",
                                      "adaptive-cofilter", "parfilter"};
  double q = 0.05;
  std::string combiner = "stouffer";
  double lambda = -1.0;
  std::uint64_t seed = 0;
  std::string out = ".";
};

struct SplineArgs {
  std::string input;
  int df = 4;
  std::string out = "spline.csv";
};

// Configuration used when no --config file is given: max-rep for u = n,
// the parity two-group split for 2 <= u < n, one joint group for u = 1.
pf::TestingConfig default_config(int n, std::size_t m, int u, double lambda,
                                 std::uint64_t seed) {
  if (u < 1 || u > n) {
    throw pf::ValidationError("replicability level u=" + std::to_string(u) +
                              " must lie in [1, " + std::to_string(n) + "]");
  }
  if (u == n) return pf::max_rep_config(n, m, lambda);
  if (u >= 2) return pf::two_group_config(n, m, u, seed, lambda);
  pf::TestingConfig config;
  config.n = n;
  config.u = 1;
  config.groups.emplace_back();
  for (int j = 0; j < n; ++j) config.groups[0].push_back(j);
  config.weights = {1.0};
  config.lambdas = {lambda};
  config.levels = pf::Grid<int>(m, 1);
  for (std::size_t i = 0; i < m; ++i) config.levels(i, 0) = 1;
  pf::validate_config(config);
  return config;
}

struct LoadedData {
  pf::NamedMatrix pvalues;
  pf::CovariateSet covariates;
};

LoadedData load_data(const std::string& pvalue_path,
                     const std::vector<std::string>& covariate_paths) {
  LoadedData data;
  data.pvalues = pf::read_pvalue_csv(pvalue_path);
  const std::size_t n = data.pvalues.columns.size();
  std::vector<std::string> paths = covariate_paths;
  if (paths.empty()) paths.assign(n, "-");
  if (paths.size() != n) {
    throw pf::ValidationError("expected " + std::to_string(n) +
                              " covariate paths (use '-' for studies without covariates), got " +
                              std::to_string(paths.size()));
  }
  data.covariates = pf::assemble_covariates(paths, data.pvalues.features);
  return data;
}

pf::TestingConfig resolve_config(const std::string& config_path, int n, std::size_t m, int u,
                                 double lambda, std::uint64_t seed) {
  if (!config_path.empty()) {
    return pf::load_config_file(config_path, n, m, lambda);
  }
  return default_config(n, m, u == 0 ? n : u, lambda, seed);
}

int run_analyze(const AnalyzeArgs& args) {
  const pf::AnalysisMode mode = pf::analysis_mode_from_name(args.mode);
  const double lambda =
      args.lambda >= 0.0
          ? args.lambda
          : (mode == pf::AnalysisMode::independence_adaptive ? 0.5 : 1.0);

  LoadedData data = load_data(args.pvalues, args.covariates);
  const int n = static_cast<int>(data.pvalues.columns.size());
  const std::size_t m = data.pvalues.values.rows();
  const pf::TestingConfig config =
      resolve_config(args.config_path, n, m, args.u, lambda, args.seed);

  pf::ParFilterOptions options;
  options.mode = mode;
  options.weights = pf::weight_mode_from_name(args.weights);
  options.combiner = pf::combiner_from_name(args.combiner);
  options.allow_unproven = args.allow_unproven;

  const pf::RejectionReport report =
      pf::parfilter(data.pvalues.values, data.covariates, config, args.q, options);

  const fs::path out_dir(args.out);
  fs::create_directories(out_dir);
  const auto groups = static_cast<std::size_t>(config.group_count());

  // Per-feature table.
  std::ostringstream rej;
  rej << "feature\trejected";
  for (std::size_t k = 1; k <= groups; ++k) rej << "\tlocal_pc_" << k;
  for (std::size_t k = 1; k <= groups; ++k) rej << "\tnu_" << k;
  rej << '\n';
  std::vector<char> rejected_flag(m, 0);
  for (int i : report.rejected) rejected_flag[static_cast<std::size_t>(i)] = 1;
  for (std::size_t i = 0; i < m; ++i) {
    rej << data.pvalues.features[i] << '\t' << int(rejected_flag[i]);
    for (std::size_t k = 0; k < groups; ++k) rej << '\t' << fmt(report.local_pc(i, k));
    for (std::size_t k = 0; k < groups; ++k) rej << '\t' << fmt(report.weights.nu(i, k));
    rej << '\n';
  }
  write_text(out_dir / "rejections.tsv", rej.str());

  // Run-level summary, one key per line.
  std::ostringstream summary;
  summary << "key\tvalue\n";
  summary << "mode\t" << pf::analysis_mode_name(options.mode) << '\n';
  summary << "weights\t" << pf::weight_mode_name(options.weights) << '\n';
  summary << "combiner\t" << pf::combiner_name(options.combiner) << '\n';
  summary << "q\t" << fmt(args.q) << '\n';
  summary << "features\t" << m << '\n';
  summary << "studies\t" << n << '\n';
  summary << "groups\t" << groups << '\n';
  summary << "u\t" << config.u << '\n';
  summary << "rejections\t" << report.rejected.size() << '\n';
  summary << "sweeps\t" << report.sweeps << '\n';
  for (std::size_t k = 0; k < groups; ++k) {
    summary << "t_hat_" << (k + 1) << '\t' << fmt(report.t_hat[k]) << '\n';
    summary << "pi_hat_" << (k + 1) << '\t' << fmt(report.pi_hat[k]) << '\n';
    summary << "selected_" << (k + 1) << '\t' << report.selection.sets[k].size() << '\n';
    summary << "lambda_" << (k + 1) << '\t' << fmt(config.lambdas[k]) << '\n';
  }
  for (const std::string& warning : report.warnings) {
    summary << "warning\t" << warning << '\n';
  }
  write_text(out_dir / "summary.tsv", summary.str());

  for (int study : args.posthoc_studies) {
    if (study < 1 || study > n) {
      throw pf::ValidationError("post hoc study index " + std::to_string(study) +
                                " is out of range [1, " + std::to_string(n) + "]");
    }
    const int j = study - 1;
    double q_j = args.posthoc_q;
    if (q_j <= 0.0) {
      for (std::size_t k = 0; k < groups; ++k) {
        const auto& members = config.groups[k];
        if (std::find(members.begin(), members.end(), j) != members.end()) {
          q_j = config.weights[k] * args.q;
          break;
        }
      }
    }
    const std::vector<int> kept =
        pf::posthoc_rejections(report, data.pvalues.values, j, q_j);
    std::vector<char> post_flag(m, 0);
    for (int i : kept) post_flag[static_cast<std::size_t>(i)] = 1;
    std::ostringstream post;
    post << "feature\tp\trejected\n";
    for (int i : report.rejected) {
      const auto idx = static_cast<std::size_t>(i);
      post << data.pvalues.features[idx] << '\t'
           << fmt(data.pvalues.values(idx, static_cast<std::size_t>(j))) << '\t'
           << int(post_flag[idx]) << '\n';
    }
    write_text(out_dir / ("posthoc_" + std::to_string(study) + ".tsv"), post.str());
  }

  std::cout << "rejected " << report.rejected.size() << " of " << m << " features\n";
  return 0;
}

pf::SimScenario scenario_defaults() {
  pf::SimScenario scenario;
  scenario.m = 500;
  scenario.n = 2;
  scenario.u = 2;
  scenario.gamma1 = 1.0;
  scenario.xi = 0.78;
  scenario.name = "scenario";
  return scenario;
}

std::vector<double> number_list(const json& value, const char* field) {
  std::vector<double> out;
  if (value.is_array()) {
    for (const auto& entry : value) {
      if (!entry.is_number()) {
        throw pf::ValidationError(std::string("scenario field '") + field +
                                  "' must contain numbers");
      }
      out.push_back(entry.get<double>());
    }
  } else if (value.is_number()) {
    out.push_back(value.get<double>());
  } else {
    throw pf::ValidationError(std::string("scenario field '") + field +
                              "' must be a number or an array of numbers");
  }
  if (out.empty()) {
    throw pf::ValidationError(std::string("scenario field '") + field + "' is empty");
  }
  return out;
}

// Expands a scenario JSON document (arrays over m, u, xi form a grid) into
// one ExperimentSpec per grid cell.
std::vector<pf::ExperimentSpec> load_scenarios(const std::string& path,
                                               const SimulateArgs& args) {
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    throw pf::ValidationError("cannot open '" + path + "' for reading");
  }
  json doc;
  try {
    doc = json::parse(file);
  } catch (const json::parse_error& error) {
    throw pf::ValidationError("'" + path + "': " + error.what());
  }
  if (!doc.is_object()) {
    throw pf::ValidationError("'" + path + "' must hold a JSON object");
  }

  pf::SimScenario base = scenario_defaults();
  if (doc.contains("name")) base.name = doc.at("name").get<std::string>();
  if (doc.contains("n")) base.n = doc.at("n").get<int>();
  if (doc.contains("gamma1")) base.gamma1 = doc.at("gamma1").get<double>();
  if (doc.contains("seed")) base.seed = doc.at("seed").get<std::uint64_t>();
  if (doc.contains("ar1_rho")) base.ar1_rho = doc.at("ar1_rho").get<double>();
  if (doc.contains("dependence")) {
    const std::string kind = doc.at("dependence").get<std::string>();
    if (kind == "independent") {
      base.dependence = pf::DependenceKind::independent;
    } else if (kind == "ar1") {
      base.dependence = pf::DependenceKind::ar1;
    } else {
      throw pf::ValidationError("unknown dependence kind '" + kind + "'");
    }
  }
  if (doc.contains("family")) {
    const std::string family = doc.at("family").get<std::string>();
    if (family == "logistic-mixture") {
      base.family = pf::ScenarioFamily::logistic_mixture;
    } else if (family == "all-signal") {
      base.family = pf::ScenarioFamily::all_signal;
    } else {
      throw pf::ValidationError("unknown scenario family '" + family + "'");
    }
  }

  std::vector<double> m_grid = doc.contains("m") ? number_list(doc.at("m"), "m")
                                                 : std::vector<double>{500};
  std::vector<double> u_grid = doc.contains("u") ? number_list(doc.at("u"), "u")
                                                 : std::vector<double>{2};
  std::vector<double> xi_grid = doc.contains("xi") ? number_list(doc.at("xi"), "xi")
                                                   : std::vector<double>{0.78};

  pf::ExperimentSpec proto;
  proto.reps = doc.contains("reps") ? doc.at("reps").get<int>() : 100;
  proto.q = doc.contains("q") ? doc.at("q").get<double>() : 0.05;
  proto.combiner = pf::combiner_from_name(
      doc.contains("combiner") ? doc.at("combiner").get<std::string>() : "stouffer");
  if (doc.contains("methods")) {
    proto.methods = doc.at("methods").get<std::vector<std::string>>();
  } else {
    proto.methods = {"bh", "parfilter"};
  }

  // Command-line flags override the file.
  if (args.reps > 0) proto.reps = args.reps;
  if (!args.methods.empty()) proto.methods = args.methods;
  if (args.seed_given) base.seed = args.seed;

  std::vector<pf::ExperimentSpec> specs;
  const bool xi_varies = xi_grid.size() > 1;
  for (double xi : xi_grid) {
    for (double m_value : m_grid) {
      for (double u_value : u_grid) {
        pf::ExperimentSpec spec = proto;
        spec.scenario = base;
        spec.scenario.m = static_cast<std::size_t>(m_value);
        spec.scenario.u = static_cast<int>(u_value);
        spec.scenario.xi = xi;
        if (xi_varies) spec.scenario.name = base.name + "-xi" + fmt(xi);
        spec.threads = args.threads;
        specs.push_back(std::move(spec));
      }
    }
  }
  return specs;
}

std::vector<pf::ExperimentSpec> preset_specs(const SimulateArgs& args) {
  std::vector<pf::ExperimentSpec> specs;
  if (args.preset == "figure1") {
    for (std::size_t m : {std::size_t{1}, std::size_t{5}, std::size_t{25}, std::size_t{100},
                          std::size_t{250}}) {
      for (int u = 1; u <= 4; ++u) {
        pf::ExperimentSpec spec;
        spec.scenario.m = m;
        spec.scenario.n = 4;
        spec.scenario.u = u;
        spec.scenario.xi = 0.74;
        spec.scenario.family = pf::ScenarioFamily::all_signal;
        spec.scenario.seed = args.seed;
        spec.scenario.name = "figure1";
        spec.methods = {"bh"};
        spec.reps = args.reps > 0 ? args.reps : 500;
        spec.q = args.q;
        spec.combiner = pf::combiner_from_name(args.combiner);
        spec.threads = args.threads;
        if (!args.methods.empty()) spec.methods = args.methods;
        specs.push_back(std::move(spec));
      }
    }
    return specs;
  }
  if (args.preset == "smoke") {
    pf::ExperimentSpec spec;
    spec.scenario.m = 200;
    spec.scenario.n = 2;
    spec.scenario.u = 2;
    spec.scenario.gamma1 = 1.0;
    spec.scenario.xi = 0.78;
    spec.scenario.seed = args.seed;
    spec.scenario.name = "smoke";
    spec.methods = {"bh", "adaptive-bh", "parfilter", "parfilter-unit"};
    spec.reps = args.reps > 0 ? args.reps : 2;
    spec.q = args.q;
    spec.combiner = pf::combiner_from_name(args.combiner);
    spec.threads = args.threads;
    if (!args.methods.empty()) spec.methods = args.methods;
    specs.push_back(std::move(spec));
    return specs;
  }
  throw pf::ValidationError("unknown preset '" + args.preset +
                            "' (expected figure1 or smoke)");
}

int run_simulate(const SimulateArgs& args) {
  if (args.preset.empty() == args.scenario_path.empty()) {
    throw pf::ValidationError("pass exactly one of --preset or --scenario");
  }
  const std::vector<pf::ExperimentSpec> specs =
      args.preset.empty() ? load_scenarios(args.scenario_path, args) : preset_specs(args);

  std::vector<pf::MetricsRow> rows;
  for (const pf::ExperimentSpec& spec : specs) {
    std::vector<pf::MetricsRow> cell = pf::run_experiment(spec);
    rows.insert(rows.end(), cell.begin(), cell.end());
  }

  const fs::path out_dir(args.out);
  fs::create_directories(out_dir);
  const fs::path metrics = out_dir / "metrics.tsv";
  pf::write_metrics_tsv(rows, metrics.string());
  std::cout << "wrote " << rows.size() << " metric rows to " << metrics.string() << '\n';
  return 0;
}

int run_compare(const CompareArgs& args) {
  if (args.methods.empty()) {
    throw pf::ValidationError("comparison needs at least one method");
  }
  for (const std::string& method : args.methods) {
    const auto& known = pf::known_methods();
    if (std::find(known.begin(), known.end(), method) == known.end()) {
      throw pf::ValidationError("unknown method '" + method + "'");
    }
    if (method == "oracle") {
      throw pf::ValidationError(
          "method 'oracle' needs simulation ground truth; run it through 'simulate'");
    }
  }

  LoadedData data = load_data(args.pvalues, args.covariates);
  const int n = static_cast<int>(data.pvalues.columns.size());
  const std::size_t m = data.pvalues.values.rows();
  const pf::Combiner combiner = pf::combiner_from_name(args.combiner);
  const int u = args.u == 0 ? n : args.u;

  const auto config_for = [&](double lambda) {
    return resolve_config(args.config_path, n, m, u, lambda, args.seed);
  };

  std::vector<std::vector<char>> flags;
  std::vector<std::size_t> counts;
  for (const std::string& method : args.methods) {
    const std::vector<int> rejected = pf::method_rejections(
        method, data.pvalues.values, data.covariates, u, combiner, args.q, config_for);
    std::vector<char> flag(m, 0);
    for (int i : rejected) flag[static_cast<std::size_t>(i)] = 1;
    flags.push_back(std::move(flag));
    counts.push_back(rejected.size());
  }

  const fs::path out_dir(args.out);
  fs::create_directories(out_dir);

  std::ostringstream table;
  table << "feature";
  for (const std::string& method : args.methods) table << '\t' << method;
  table << '\n';
  for (std::size_t i = 0; i < m; ++i) {
    table << data.pvalues.features[i];
    for (const auto& flag : flags) table << '\t' << int(flag[i]);
    table << '\n';
  }
  write_text(out_dir / "compare.tsv", table.str());

  std::ostringstream summary;
  summary << "method\trejections\n";
  for (std::size_t idx = 0; idx < args.methods.size(); ++idx) {
    summary << args.methods[idx] << '\t' << counts[idx] << '\n';
  }
  write_text(out_dir / "compare_summary.tsv", summary.str());
  std::cout << "compared " << args.methods.size() << " methods on " << m << " features\n";
  return 0;
}

int run_spline(const SplineArgs& args) {
  const pf::NamedMatrix input = pf::read_covariate_csv(args.input);
  if (input.values.cols() != 1) {
    throw pf::ValidationError("spline preprocessing expands exactly one covariate column; '" +
                              args.input + "' has " + std::to_string(input.values.cols()));
  }
  std::vector<double> column(input.values.rows());
  for (std::size_t i = 0; i < column.size(); ++i) column[i] = input.values(i, 0);
  const pf::Matrix basis = pf::natural_cubic_basis(column, args.df);

  pf::NamedMatrix out;
  out.features = input.features;
  out.values = basis;
  for (std::size_t j = 1; j <= basis.cols(); ++j) {
    out.columns.push_back("c_" + std::to_string(j));
  }
  pf::write_csv(out, args.out);
  std::cout << "wrote " << basis.cols() << " basis columns to " << args.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Replicability analysis across studies with FDR control"};
  app.require_subcommand(1);

  AnalyzeArgs analyze_args;
  CLI::App* analyze = app.add_subcommand("analyze", "Run the analysis on CSV data");
  analyze->add_option("--pvalues", analyze_args.pvalues, "CSV with header feature,study_1,...")
      ->required();
  analyze->add_option("--covariates", analyze_args.covariates,
                      "Per-study covariate CSVs ('-' for none)");
  analyze->add_option("--config", analyze_args.config_path, "Testing-configuration JSON");
  analyze->add_option("--u", analyze_args.u,
                      "Replicability level for the default configuration (0 = all studies)");
  analyze->add_option("--q", analyze_args.q, "FDR target in (0,1)");
  analyze->add_option("--mode", analyze_args.mode,
                      "indep-adaptive | indep-nonadaptive | dependence");
  analyze->add_option("--weights", analyze_args.weights, "model-a | model-b | unit");
  analyze->add_option("--combiner", analyze_args.combiner,
                      "stouffer | fisher | simes | bonferroni");
  analyze->add_option("--lambda", analyze_args.lambda,
                      "Selection/estimator tuning value (default by mode)");
  analyze->add_option("--seed", analyze_args.seed, "Seed for the default level draw");
  analyze->add_flag("--allow-unproven", analyze_args.allow_unproven,
                    "Run option combinations without a stated FDR guarantee");
  analyze->add_option("--posthoc-study", analyze_args.posthoc_studies,
                      "1-based study for a per-study report (repeatable)");
  analyze->add_option("--posthoc-q", analyze_args.posthoc_q,
                      "Per-study FDR target (default: the study group's share of q)");
  analyze->add_option("--out", analyze_args.out, "Output directory");

  SimulateArgs simulate_args;
  CLI::App* simulate = app.add_subcommand("simulate", "Run simulation experiments");
  simulate->add_option("--preset", simulate_args.preset, "figure1 | smoke");
  simulate->add_option("--scenario", simulate_args.scenario_path, "Scenario JSON");
  simulate->add_option("--reps", simulate_args.reps, "Replicates (0 = preset default)");
  simulate->add_option("--methods", simulate_args.methods, "Methods to run")
      ->delimiter(',');
  simulate->add_option("--q", simulate_args.q, "FDR target in (0,1)");
  simulate->add_option("--combiner", simulate_args.combiner,
                       "stouffer | fisher | simes | bonferroni");
  CLI::Option* seed_opt =
      simulate->add_option("--seed", simulate_args.seed, "Scenario seed");
  simulate->add_option("--threads", simulate_args.threads,
                       "Worker threads (0 = hardware concurrency)");
  simulate->add_option("--out", simulate_args.out, "Output directory");

  CompareArgs compare_args;
  CLI::App* compare = app.add_subcommand("compare", "Run several methods on one dataset");
  compare->add_option("--pvalues", compare_args.pvalues, "CSV with header feature,study_1,...")
      ->required();
  compare->add_option("--covariates", compare_args.covariates,
                      "Per-study covariate CSVs ('-' for none)");
  compare->add_option("--config", compare_args.config_path, "Testing-configuration JSON");
  compare->add_option("--u", compare_args.u, "Replicability level (0 = all studies)");
  compare->add_option("--methods", compare_args.methods, "Methods to compare")
      ->delimiter(',');
  compare->add_option("--q", compare_args.q, "FDR target in (0,1)");
  compare->add_option("--combiner", compare_args.combiner,
                      "stouffer | fisher | simes | bonferroni");
  compare->add_option("--seed", compare_args.seed, "Seed for the default level draw");
  compare->add_option("--out", compare_args.out, "Output directory");

  SplineArgs spline_args;
  CLI::App* preprocess = app.add_subcommand("preprocess", "Input preprocessing utilities");
  preprocess->require_subcommand(1);
  CLI::App* spline =
      preprocess->add_subcommand("spline", "Expand one covariate into a spline basis");
  spline->add_option("--input", spline_args.input, "Single-column covariate CSV")->required();
  spline->add_option("--df", spline_args.df, "Basis dimension (>= 2)");
  spline->add_option("--out", spline_args.out, "Output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    const int code = app.exit(error);
    return code == 0 ? 0 : 2;
  }
  simulate_args.seed_given = seed_opt->count() > 0;

  try {
    if (analyze->parsed()) return run_analyze(analyze_args);
    if (simulate->parsed()) return run_simulate(simulate_args);
    if (compare->parsed()) return run_compare(compare_args);
    if (preprocess->parsed() && spline->parsed()) return run_spline(spline_args);
    throw pf::ValidationError("no subcommand given");
  } catch (const pf::ModeMismatchError& error) {
    std::cerr << "mode mismatch: " << error.what() << '\n';
    return 4;
  } catch (const pf::NumericError& error) {
    std::cerr << "numerical failure: " << error.what() << '\n';
    return 3;
  } catch (const pf::ValidationError& error) {
    std::cerr << "invalid input: " << error.what() << '\n';
    return 2;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << '\n';
    return 1;
  }
}
