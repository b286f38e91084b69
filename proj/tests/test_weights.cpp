#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "parfilter/config.hpp"
#include "parfilter/errors.hpp"
#include "parfilter/rng.hpp"
#include "parfilter/select.hpp"
#include "parfilter/weights.hpp"

using namespace parfilter;

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Draws from the two-group mixture by inverting each component's CDF.
std::vector<double> mixture_sample(double pi, double k, std::size_t m, RandomStream& rng) {
  std::vector<double> p(m);
  for (double& v : p) {
    const double c = rng.uniform();
    v = c < pi ? rng.uniform() : std::pow(rng.uniform(), 1.0 / (1.0 - k));
  }
  return p;
}

}  // namespace

TEST_CASE("mixture density integrates to one") {
  boost::math::quadrature::tanh_sinh<double> integrator;
  for (const auto& [z, b] : {std::pair{0.3, -0.5}, std::pair{-1.0, 1.2}, std::pair{2.0, 2.0}}) {
    const WorkingModelParams params{{z}, {b}};
    const std::vector<double> x{};
    const double total = integrator.integrate(
        [&](double p) { return mixture_density(params, p, x); }, 0.0, 1.0);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("expected p-value matches quadrature") {
  boost::math::quadrature::tanh_sinh<double> integrator;
  const WorkingModelParams params{{0.4, -0.3}, {0.1, 0.6}};
  const std::vector<double> x{0.8};
  const double numeric = integrator.integrate(
      [&](double p) { return p * mixture_density(params, p, x); }, 0.0, 1.0);
  CHECK(expected_p(params, x) == doctest::Approx(numeric).epsilon(1e-10));

  // Closed form at known pi, k.
  const double pi = sigmoid(0.4 - 0.3 * 0.8);
  const double k = sigmoid(0.1 + 0.6 * 0.8);
  CHECK(expected_p(params, x) ==
        doctest::Approx((2.0 * (1.0 - k) + k * pi) / (4.0 - 2.0 * k)).epsilon(1e-14));
}

TEST_CASE("signal posterior is the mixture's signal share") {
  const WorkingModelParams params{{0.2}, {-0.4}};
  const std::vector<double> x{};
  for (double p : {1e-8, 0.01, 0.3, 0.99, 1.0}) {
    const double f = mixture_density(params, p, x);
    const double pi = sigmoid(0.2);
    const double k = sigmoid(-0.4);
    const double expected = (1.0 - pi) * (1.0 - k) * std::pow(p, -k) / f;
    const double got = signal_posterior(params, p, x);
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));
    CHECK(got >= 0.0);
    CHECK(got <= 1.0);
  }
}

TEST_CASE("log-likelihood gradient matches finite differences") {
  RandomStream rng(7, 0, 0);
  const std::size_t m = 40;
  Matrix x(m, 1);
  std::vector<double> p(m);
  for (std::size_t i = 0; i < m; ++i) {
    x(i, 0) = rng.normal();
    p[i] = rng.uniform();
  }
  for (int point = 0; point < 20; ++point) {
    WorkingModelParams params;
    params.zeta = {rng.normal(), rng.normal()};
    params.beta = {rng.normal(), rng.normal()};
    std::vector<double> grad;
    log_likelihood(params, p, x, &grad);
    REQUIRE(grad.size() == 4);
    for (std::size_t c = 0; c < 4; ++c) {
      const double h = 1e-6;
      WorkingModelParams lo = params, hi = params;
      double& lo_c = c < 2 ? lo.zeta[c] : lo.beta[c - 2];
      double& hi_c = c < 2 ? hi.zeta[c] : hi.beta[c - 2];
      lo_c -= h;
      hi_c += h;
      const double numeric =
          (log_likelihood(hi, p, x) - log_likelihood(lo, p, x)) / (2.0 * h);
      const double scale = std::max({1.0, std::abs(numeric), std::abs(grad[c])});
      CHECK(std::abs(grad[c] - numeric) / scale < 1e-4);
    }
  }
}

TEST_CASE("fit recovers mixture parameters without covariates") {
  RandomStream rng(11, 0, 0);
  const double pi_true = 0.6;
  const double k_true = 0.5;
  const std::vector<double> p = mixture_sample(pi_true, k_true, 4000, rng);
  const Matrix x(p.size(), 1, 0.0);
  const FitReport fit = fit_working_model(p, x);
  CHECK(fit.converged);
  CHECK_FALSE(fit.intercept_only);
  CHECK(sigmoid(fit.params.zeta[0]) == doctest::Approx(pi_true).epsilon(0.15));
  CHECK(sigmoid(fit.params.beta[0]) == doctest::Approx(k_true).epsilon(0.25));
}

TEST_CASE("fit handles degenerate all-one inputs instead of crashing") {
  const std::vector<double> p(60, 1.0);
  const Matrix x(60, 1, 0.0);
  const FitReport fit = fit_working_model(p, x);
  // The null probability is pushed toward 1; the ascent either saturates the
  // box or stops on a vanishing gradient, but never diverges.
  CHECK((fit.converged || fit.at_bound));
  CHECK(sigmoid(fit.params.zeta[0]) > 0.99);
}

TEST_CASE("fit validates its inputs") {
  const std::vector<double> p(5, 0.5);
  const Matrix x(5, 1, 0.0);
  CHECK_THROWS_AS(fit_working_model(p, x), ValidationError);
  const std::vector<double> bad{0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 2.0};
  const Matrix x11(11, 1, 0.0);
  CHECK_THROWS_AS(fit_working_model(bad, x11), ValidationError);
}

TEST_CASE("poisson-binomial tail") {
  const std::vector<double> half{0.5, 0.5};
  CHECK(prob_at_least(half, 0) == 1.0);
  CHECK(prob_at_least(half, 1) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(prob_at_least(half, 2) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(prob_at_least(half, -3) == 1.0);
  CHECK_THROWS_AS(prob_at_least(half, 3), ValidationError);

  // Against explicit enumeration for up to four events.
  RandomStream rng(13, 0, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const int count = 1 + static_cast<int>(rng.index(4));
    std::vector<double> marginals(count);
    for (double& w : marginals) w = rng.uniform();
    for (int v = 0; v <= count; ++v) {
      double brute = 0.0;
      for (int mask = 0; mask < (1 << count); ++mask) {
        int ones = 0;
        double prob = 1.0;
        for (int j = 0; j < count; ++j) {
          if (mask & (1 << j)) {
            ++ones;
            prob *= marginals[j];
          } else {
            prob *= 1.0 - marginals[j];
          }
        }
        if (ones >= v) brute += prob;
      }
      CHECK(prob_at_least(marginals, v) == doctest::Approx(brute).epsilon(1e-12));
    }
  }
}

TEST_CASE("replication posterior matches status enumeration") {
  RandomStream rng(17, 0, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const int count = 2 + static_cast<int>(rng.index(3));
    std::vector<WorkingModelParams> params(count);
    std::vector<double> pvals(count);
    std::vector<std::vector<double>> xrows(count);
    std::vector<double> omega(count);
    for (int j = 0; j < count; ++j) {
      params[j].zeta = {rng.normal(), rng.normal()};
      params[j].beta = {rng.normal(), rng.normal()};
      pvals[j] = rng.uniform();
      xrows[j] = {rng.normal()};
      omega[j] = signal_posterior(params[j], pvals[j], xrows[j]);
    }
    for (int v = 0; v <= count; ++v) {
      double brute = 0.0;
      for (int mask = 0; mask < (1 << count); ++mask) {
        int ones = 0;
        double prob = 1.0;
        for (int j = 0; j < count; ++j) {
          if (mask & (1 << j)) {
            ++ones;
            prob *= omega[j];
          } else {
            prob *= 1.0 - omega[j];
          }
        }
        if (ones >= v) brute += prob;
      }
      CHECK(replication_posterior(params, pvals, xrows, v) ==
            doctest::Approx(brute).epsilon(1e-12));
    }
  }
}

TEST_CASE("weight normalization") {
  const std::vector<double> raw{1.0, 3.0};
  bool fell_back = true;
  const std::vector<double> scaled = normalized_weights(raw, &fell_back);
  CHECK_FALSE(fell_back);
  CHECK(scaled[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(scaled[1] == doctest::Approx(1.5).epsilon(1e-14));

  const std::vector<double> zero{0.0, 0.0, 0.0};
  const std::vector<double> unit = normalized_weights(zero, &fell_back);
  CHECK(fell_back);
  CHECK(unit == std::vector<double>{1.0, 1.0, 1.0});

  const std::vector<double> negative{-0.1, 0.5};
  CHECK_THROWS_AS(normalized_weights(negative, nullptr), ValidationError);
}

namespace {

struct WeightFixture {
  TestingConfig config;
  Matrix p;
  CovariateSet x;
  SelectionResult selection;

  // Two singleton groups, 80 features; the first 20 features are selected in
  // both groups, the rest train the model.
  WeightFixture() {
    const std::size_t m = 80;
    config.n = 2;
    config.u = 2;
    config.groups = {{0}, {1}};
    config.weights = {0.5, 0.5};
    config.lambdas = {0.5, 0.5};
    config.levels = Grid<int>(m, 2, 1);
    validate_config(config);

    RandomStream rng(23, 0, 0);
    p = Matrix(m, 2);
    Matrix covariate(m, 1);
    for (std::size_t i = 0; i < m; ++i) {
      covariate(i, 0) = rng.normal();
      p(i, 0) = rng.uniform();
      p(i, 1) = rng.uniform();
    }
    x = {covariate, covariate};

    selection.sets.resize(2);
    for (int i = 0; i < 20; ++i) {
      selection.sets[0].push_back(i);
      selection.sets[1].push_back(i);
    }
    selection.rule = "fixed";
  }
};

double group_sum(const Matrix& nu, const std::vector<int>& selected, int k) {
  double total = 0.0;
  for (int i : selected) total += nu(i, k);
  return total;
}

}  // namespace

TEST_CASE("unit weights are one on the selection and zero elsewhere") {
  const WeightFixture f;
  const LocalWeights weights = unit_weights(f.selection, f.p.rows());
  CHECK(weights.mode == "unit");
  for (std::size_t i = 0; i < f.p.rows(); ++i) {
    const double expected = i < 20 ? 1.0 : 0.0;
    CHECK(weights.nu(i, 0) == expected);
    CHECK(weights.nu(i, 1) == expected);
  }
}

TEST_CASE("model-a weights normalize over each selection set") {
  const WeightFixture f;
  const LocalWeights weights = model_a_weights(f.p, f.x, f.selection, f.config);
  CHECK(weights.mode == "model-a");
  REQUIRE(weights.fits.size() == 2);
  for (int k = 0; k < 2; ++k) {
    CHECK(group_sum(weights.nu, f.selection.sets[k], k) ==
          doctest::Approx(20.0).epsilon(1e-9));
    for (std::size_t i = 20; i < f.p.rows(); ++i) CHECK(weights.nu(i, k) == 0.0);
    for (int i : f.selection.sets[k]) CHECK(weights.nu(i, k) >= 0.0);
  }
  CHECK(weights.fits[0].study == 0);
  CHECK(weights.fits[1].study == 1);
}

TEST_CASE("model-a ignores selected rows of the group it scores") {
  const WeightFixture f;
  const LocalWeights before = model_a_weights(f.p, f.x, f.selection, f.config);

  // Perturb group 1's own p-values on selected rows only: the training set
  // (non-selected rows) is untouched, so column 1 must not move at all.
  Matrix tampered = f.p;
  for (int i = 0; i < 20; ++i) tampered(i, 0) = 0.987;
  const LocalWeights after = model_a_weights(tampered, f.x, f.selection, f.config);
  for (int i : f.selection.sets[0]) {
    CHECK(after.nu(i, 0) == before.nu(i, 0));
  }
}

TEST_CASE("model-b weights never read the scored group's p-values") {
  const WeightFixture f;
  const LocalWeights before = model_b_weights(f.p, f.x, f.selection, f.config);
  CHECK(before.mode == "model-b");
  for (int k = 0; k < 2; ++k) {
    CHECK(group_sum(before.nu, f.selection.sets[k], k) ==
          doctest::Approx(20.0).epsilon(1e-9));
  }

  // Rewrite group 1's entire p-value column; column 1 of nu must be
  // bit-identical because it is scored from the complement only.
  Matrix tampered = f.p;
  RandomStream rng(29, 0, 0);
  for (std::size_t i = 0; i < f.p.rows(); ++i) tampered(i, 0) = rng.uniform();
  const LocalWeights after = model_b_weights(tampered, f.x, f.selection, f.config);
  for (int i : f.selection.sets[0]) {
    CHECK(after.nu(i, 0) == before.nu(i, 0));
  }
}

TEST_CASE("weight constructors validate shapes") {
  const WeightFixture f;
  CovariateSet short_x = {f.x[0]};
  CHECK_THROWS_AS(model_a_weights(f.p, short_x, f.selection, f.config), ValidationError);
  SelectionResult bad = f.selection;
  bad.sets[0].push_back(200);
  CHECK_THROWS_AS(model_a_weights(f.p, f.x, bad, f.config), ValidationError);
}
