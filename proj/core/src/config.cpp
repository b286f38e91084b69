#include "parfilter/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "parfilter/rng.hpp"

namespace parfilter {

void validate_config(const TestingConfig& config) {
  if (config.n < 1) {
    throw ValidationError("configuration needs at least one study");
  }
  const int K = config.group_count();
  if (K < 1) {
    throw ValidationError("configuration needs at least one group");
  }
  std::vector<int> seen(config.n, 0);
  for (int k = 0; k < K; ++k) {
    if (config.groups[k].empty()) {
      throw ValidationError("group " + std::to_string(k + 1) + " is empty");
    }
    for (int j : config.groups[k]) {
      if (j < 0 || j >= config.n) {
        throw ValidationError("group " + std::to_string(k + 1) +
                              " references study index " + std::to_string(j + 1) +
                              " outside 1.." + std::to_string(config.n));
      }
      if (seen[j]++) {
        throw ValidationError("study " + std::to_string(j + 1) +
                              " appears in more than one group");
      }
    }
  }
  for (int j = 0; j < config.n; ++j) {
    if (!seen[j]) {
      throw ValidationError("study " + std::to_string(j + 1) + " belongs to no group");
    }
  }
  if (static_cast<int>(config.weights.size()) != K ||
      static_cast<int>(config.lambdas.size()) != K) {
    throw ValidationError("weights and lambdas must have one entry per group");
  }
  double weight_sum = 0.0;
  for (double w : config.weights) {
    if (!(w > 0.0 && w <= 1.0)) {
      throw ValidationError("local error weights must lie in (0,1]");
    }
    weight_sum += w;
  }
  if (std::abs(weight_sum - 1.0) > 1e-12) {
    throw ValidationError("local error weights sum to " + std::to_string(weight_sum) +
                          ", expected 1");
  }
  for (double lambda : config.lambdas) {
    if (!(lambda > 0.0 && lambda <= 1.0)) {
      throw ValidationError("lambda values must lie in (0,1]");
    }
  }
  if (config.levels.cols() != static_cast<std::size_t>(K)) {
    throw ValidationError("levels matrix must have one column per group");
  }
  if (config.u < 1 || config.u > config.n) {
    throw ValidationError("replicability level u=" + std::to_string(config.u) +
                          " must lie in [1, n]");
  }
  for (std::size_t i = 0; i < config.levels.rows(); ++i) {
    int level_sum = 0;
    for (int k = 0; k < K; ++k) {
      const int u_ik = config.levels(i, k);
      const int group_size = static_cast<int>(config.groups[k].size());
      if (u_ik < 1 || u_ik > group_size) {
        throw ValidationError("local level " + std::to_string(u_ik) + " for feature " +
                              std::to_string(i + 1) + ", group " + std::to_string(k + 1) +
                              " must lie in [1, " + std::to_string(group_size) + "]");
      }
      level_sum += u_ik;
    }
    if (level_sum != config.u) {
      throw ValidationError("local levels of feature " + std::to_string(i + 1) +
                            " sum to " + std::to_string(level_sum) + ", expected u=" +
                            std::to_string(config.u));
    }
  }
}

TestingConfig max_rep_config(int n, std::size_t m, double lambda) {
  if (n < 1) {
    throw ValidationError("configuration needs at least one study");
  }
  TestingConfig config;
  config.n = n;
  config.u = n;
  config.groups.resize(n);
  for (int j = 0; j < n; ++j) config.groups[j] = {j};
  config.weights.assign(n, 1.0 / n);
  config.lambdas.assign(n, lambda);
  config.levels = Grid<int>(m, n, 1);
  validate_config(config);
  return config;
}

std::vector<std::pair<int, int>> valid_two_group_levels(int u, int size1, int size2) {
  std::vector<std::pair<int, int>> splits;
  for (int a = 1; a <= size1; ++a) {
    const int b = u - a;
    if (b >= 1 && b <= size2) splits.emplace_back(a, b);
  }
  return splits;
}

namespace {

std::pair<std::vector<int>, std::vector<int>> parity_groups(int n) {
  // 1-based studies {2,4,...} form the first group, {1,3,5,...} the second.
  std::vector<int> even_studies, odd_studies;
  for (int j = 0; j < n; ++j) {
    if ((j + 1) % 2 == 0) {
      even_studies.push_back(j);
    } else {
      odd_studies.push_back(j);
    }
  }
  return {even_studies, odd_studies};
}

}  // namespace

TestingConfig two_group_config(int n, std::size_t m, int u, const TwoGroupLevelRule& rule,
                               const Matrix* covariates, double lambda) {
  if (n < 2) {
    throw ValidationError("the two-group configuration needs at least 2 studies");
  }
  if (u < 2 || u > n) {
    throw ValidationError("the two-group configuration requires 2 <= u <= n");
  }
  TestingConfig config;
  config.n = n;
  config.u = u;
  auto [g1, g2] = parity_groups(n);
  config.groups = {g1, g2};
  config.weights = {static_cast<double>(g1.size()) / n, static_cast<double>(g2.size()) / n};
  config.lambdas = {lambda, lambda};
  config.levels = Grid<int>(m, 2, 1);
  for (std::size_t i = 0; i < m; ++i) {
    std::span<const double> x;
    if (covariates != nullptr && covariates->cols() > 0) {
      x = std::span<const double>(covariates->row_data(i), covariates->cols());
    }
    const auto [a, b] = rule(i, x);
    config.levels(i, 0) = a;
    config.levels(i, 1) = b;
  }
  validate_config(config);  // rejects constraint-violating rule output
  return config;
}

TestingConfig two_group_config(int n, std::size_t m, int u, std::uint64_t level_seed,
                               double lambda) {
  if (n < 2) {
    throw ValidationError("the two-group configuration needs at least 2 studies");
  }
  auto [g1, g2] = parity_groups(n);
  const auto splits =
      valid_two_group_levels(u, static_cast<int>(g1.size()), static_cast<int>(g2.size()));
  if (splits.empty()) {
    throw ValidationError("no valid two-group level split for u=" + std::to_string(u));
  }
  RandomStream stream(level_seed, 0, 0);
  const TwoGroupLevelRule uniform_rule =
      [&splits, &stream](std::size_t, std::span<const double>) {
        return splits[stream.index(splits.size())];
      };
  return two_group_config(n, m, u, uniform_rule, nullptr, lambda);
}

ConfigDraw sample_config(const std::vector<TestingConfig>& candidates, std::uint64_t seed) {
  if (candidates.empty()) {
    throw ValidationError("sample_config needs a nonempty candidate list");
  }
  RandomStream stream(seed, 0, 0);
  ConfigDraw draw;
  draw.index = stream.index(candidates.size());
  draw.seed = seed;
  draw.config = candidates[draw.index];
  return draw;
}

std::vector<FeatureBalance> imbalance_report(const TestingConfig& config,
                                             const GroundTruth& truth) {
  validate_config(config);
  if (truth.rows() != config.feature_count() ||
      truth.cols() != static_cast<std::size_t>(config.n)) {
    throw ValidationError("ground truth dimensions do not match the configuration");
  }
  std::vector<FeatureBalance> labels(truth.rows(), FeatureBalance::not_replicated);
  for (std::size_t i = 0; i < truth.rows(); ++i) {
    int signals_total = 0;
    for (int j = 0; j < config.n; ++j) signals_total += truth(i, j) == 0 ? 1 : 0;
    if (signals_total < config.u) continue;  // overall PC null true
    labels[i] = FeatureBalance::balanced;
    for (int k = 0; k < config.group_count(); ++k) {
      int signals_in_group = 0;
      for (int j : config.groups[k]) signals_in_group += truth(i, j) == 0 ? 1 : 0;
      if (signals_in_group < config.levels(i, k)) {
        labels[i] = FeatureBalance::imbalanced;  // local PC null true in group k
        break;
      }
    }
  }
  return labels;
}

TestingConfig load_config_json(const std::string& text, int n, std::size_t m,
                               double default_lambda) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& err) {
    throw ValidationError(std::string("configuration is not valid JSON: ") + err.what());
  }
  if (!doc.is_object() || !doc.contains("u") || !doc.contains("groups")) {
    throw ValidationError("configuration must be an object with 'u' and 'groups'");
  }
  TestingConfig config;
  config.n = n;
  config.u = doc["u"].get<int>();
  for (const auto& group : doc["groups"]) {
    std::vector<int> indices;
    for (const auto& j : group) indices.push_back(j.get<int>() - 1);  // file is 1-based
    config.groups.push_back(std::move(indices));
  }
  const int K = config.group_count();
  if (doc.contains("weights")) {
    config.weights = doc["weights"].get<std::vector<double>>();
    double sum = 0.0;
    for (double w : config.weights) sum += w;
    if (std::abs(sum - 1.0) > 1e-12) {
      throw ValidationError("configuration weights sum to " + std::to_string(sum) +
                            ", expected 1");
    }
    for (double& w : config.weights) w /= sum;  // absorb decimal round-off
  } else {
    for (const auto& group : config.groups) {
      config.weights.push_back(static_cast<double>(group.size()) / n);
    }
  }
  if (doc.contains("lambdas")) {
    config.lambdas = doc["lambdas"].get<std::vector<double>>();
  } else {
    config.lambdas.assign(K, default_lambda);
  }
  if (!doc.contains("levels")) {
    throw ValidationError("configuration must specify 'levels'");
  }
  const auto& levels = doc["levels"];
  if (levels.is_string()) {
    const std::string rule = levels.get<std::string>();
    if (rule == "max-rep") {
      if (config.u != n) {
        throw ValidationError("levels 'max-rep' requires u = n");
      }
      config.levels = Grid<int>(m, K, 1);
      for (int k = 0; k < K; ++k) {
        for (std::size_t i = 0; i < m; ++i) {
          config.levels(i, k) = static_cast<int>(config.groups[k].size());
        }
      }
    } else if (rule.rfind("two-group-random:", 0) == 0) {
      if (K != 2) {
        throw ValidationError("levels 'two-group-random' requires exactly 2 groups");
      }
      std::uint64_t seed = 0;
      try {
        seed = std::stoull(rule.substr(std::string("two-group-random:").size()));
      } catch (const std::exception&) {
        throw ValidationError("levels 'two-group-random:SEED' needs an integer seed");
      }
      const auto splits =
          valid_two_group_levels(config.u, static_cast<int>(config.groups[0].size()),
                                 static_cast<int>(config.groups[1].size()));
      if (splits.empty()) {
        throw ValidationError("no valid two-group level split for u=" +
                              std::to_string(config.u));
      }
      RandomStream stream(seed, 0, 0);
      config.levels = Grid<int>(m, 2, 1);
      for (std::size_t i = 0; i < m; ++i) {
        const auto [a, b] = splits[stream.index(splits.size())];
        config.levels(i, 0) = a;
        config.levels(i, 1) = b;
      }
    } else {
      throw ValidationError("unknown levels rule '" + rule + "'");
    }
  } else if (levels.is_array()) {
    if (levels.size() != m) {
      throw ValidationError("levels matrix has " + std::to_string(levels.size()) +
                            " rows, expected " + std::to_string(m));
    }
    config.levels = Grid<int>(m, K, 1);
    for (std::size_t i = 0; i < m; ++i) {
      if (!levels[i].is_array() || static_cast<int>(levels[i].size()) != K) {
        throw ValidationError("levels row " + std::to_string(i + 1) +
                              " must list one level per group");
      }
      for (int k = 0; k < K; ++k) config.levels(i, k) = levels[i][k].get<int>();
    }
  } else {
    throw ValidationError("'levels' must be a matrix or a rule string");
  }
  validate_config(config);
  return config;
}

TestingConfig load_config_file(const std::string& path, int n, std::size_t m,
                               double default_lambda) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open configuration file '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_config_json(buffer.str(), n, m, default_lambda);
}

}  // namespace parfilter
