#include <stdexcept>
#include <cmath>
#include <random>
#include <variant>

#include "doctest.h"
#include "gmsm/error.hpp"
#include "gmsm/estimate.hpp"
#include "gmsm/synth.hpp"
#include "support/oracles.hpp"

using namespace gmsm;

namespace {

ObservedData one_mediator(std::vector<double> x, std::vector<double> a, std::vector<double> m,
                          std::vector<double> y) {
  ObservedData d;
  d.x = {std::move(x)};
  d.a = std::move(a);
  d.mediators = {std::move(m)};
  d.y = std::move(y);
  return d;
}

// x ~ U(-1, 1), a ~ Bernoulli(0.5) independent of x, M1 from the synthetic
// structural assignment with a fair binary confounder.
ObservedData coin_treatment_data(std::size_t n, double rho, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> noise;
  std::vector<double> x(n), a(n), m(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = unif(eng);
    a[i] = coin(eng) ? 1.0 : 0.0;
    const double u = coin(eng) ? 1.0 : 0.0;
    m[i] = f_m1(x[i], a[i], u, noise(eng), rho);
    y[i] = std::sin(x[i]) + noise(eng);
  }
  return one_mediator(std::move(x), std::move(a), std::move(m), std::move(y));
}

double probit_m1(double x, double a, double rho) {
  const double blend = a * std::sin(x) + (1.0 - a) * std::sin(4.0 * x);
  return 0.5 * (normal_cdf((blend - 0.5 * rho) / rho) + normal_cdf((blend + 0.5 * rho) / rho));
}

}  // namespace

TEST_CASE("observed data validation") {
  ObservedData empty;
  CHECK_THROWS_AS(empty.validate(), DataError);
  auto d = one_mediator({0.1, 0.2}, {0, 1}, {0, 1}, {1.0});
  CHECK_THROWS_AS(d.validate(), DataError);
  d.y.push_back(NAN);
  CHECK_THROWS_AS(d.validate(), DataError);
  d.y.back() = 2.0;
  CHECK_NOTHROW(d.validate());
  const std::vector<std::size_t> rows{1};
  CHECK(d.subset(rows).y == std::vector<double>{2.0});
}

TEST_CASE("single-cell pmf is nearly degenerate under smoothing") {
  const auto d = one_mediator(std::vector<double>(100, 0.0), std::vector<double>(100, 1.0),
                              std::vector<double>(100, 1.0), std::vector<double>(100, 0.0));
  // A constant mediator has a one-point support; add a single m = 0 row in
  // a different treatment arm so both values are known.
  auto data = d;
  data.x[0].push_back(0.0);
  data.a.push_back(0.0);
  data.mediators[0].push_back(0.0);
  data.y.push_back(0.0);
  FitConfig cfg;
  cfg.x_bins = 1;
  const PmfEstimator pmf(data, 0, cfg);
  const std::vector<double> x{0.0};
  const auto est = pmf(x, {}, 1.0);
  CHECK_FALSE(est.fallback);
  REQUIRE(est.pmf.size() == 2);
  CHECK(est.pmf.probs()[0] == doctest::Approx(1.0 / 102.0));
  CHECK(est.pmf.probs()[1] == doctest::Approx(101.0 / 102.0));
}

TEST_CASE("pmf recovers the structural mediator probabilities") {
  const double rho = 1.0;
  const auto data = coin_treatment_data(50000, rho, 7);
  FitConfig cfg;
  cfg.x_bins = 5;
  const PmfEstimator pmf(data, 0, cfg);
  double worst = 0.0;
  for (int b = 0; b < cfg.x_bins; ++b) {
    const double lo = -1.0 + 0.4 * b;
    const std::vector<double> mid{lo + 0.2};
    for (double a : {0.0, 1.0}) {
      const double truth =
          oracle::simpson([&](double x) { return probit_m1(x, a, rho); }, lo, lo + 0.4, 200) / 0.4;
      const auto est = pmf(mid, {}, a);
      CHECK_FALSE(est.fallback);
      worst = std::max(worst, std::abs(est.pmf.probs()[1] - truth));
    }
  }
  // total variation of a two-point pmf is the gap in either mass
  CHECK(worst <= 0.02);
}

TEST_CASE("empty x-bin falls back to the marginal and is flagged") {
  // rows only at x = -1 and x = 1, so the middle bins are empty
  std::vector<double> x, a, m, y;
  for (int i = 0; i < 200; ++i) {
    x.push_back(i % 2 == 0 ? -1.0 : 1.0);
    a.push_back(1.0);
    m.push_back(i % 4 == 0 ? 1.0 : 0.0);
    y.push_back(0.0);
  }
  const auto data = one_mediator(x, a, m, y);
  FitConfig cfg;
  cfg.x_bins = 10;
  const PmfEstimator pmf(data, 0, cfg);
  const std::vector<double> mid{0.05};
  const auto est = pmf(mid, {}, 1.0);
  CHECK(est.fallback);
  CHECK(est.pmf.probs()[1] == doctest::Approx(51.0 / 202.0));

  FittedModel model(data, cfg);
  (void)model.mediator_pmf(1, mid, {}, 1.0);
  CHECK(model.diagnostics().pmf_fallbacks == 1);
}

TEST_CASE("unseen conditioning categories raise DataError") {
  const auto data = coin_treatment_data(500, 1.0, 3);
  const FitConfig cfg;
  const PmfEstimator pmf(data, 0, cfg);
  const std::vector<double> x{0.0};
  CHECK_THROWS_AS(pmf(x, {}, 2.0), DataError);
  const OutcomeSampler sampler(data, 1, cfg);
  const std::vector<double> m{3.0};
  CHECK_THROWS_AS(sampler(x, m, 1.0, 10, 0), DataError);
  const PropensityEstimator prop(data, cfg);
  CHECK_THROWS_AS(prop(0.5, x), DataError);
}

TEST_CASE("constant outcome stays within three bandwidths") {
  std::mt19937_64 eng(1);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const std::size_t n = 2000;
  std::vector<double> x(n), a(n), m(n, 0.0), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = unif(eng);
    a[i] = i % 2 == 0 ? 1.0 : 0.0;
    y[i] = a[i] == 1.0 ? 4.0 : unif(eng);
  }
  const auto data = one_mediator(x, a, m, y);
  const FitConfig cfg;
  const OutcomeSampler sampler(data, 1, cfg);
  const std::vector<double> q{0.0};
  const std::vector<double> mq{0.0};
  const auto [ys, h] = sampler.neighbourhood(q, mq, 1.0);
  const auto s = sampler(q, mq, 1.0, 5000, 9);
  for (double v : s.values()) REQUIRE(std::abs(v - 4.0) <= 3.0 * h + 1e-12);
  // the other arm is not constant and gets a positive bandwidth
  CHECK(sampler.neighbourhood(q, mq, 0.0).second > 0.0);
}

TEST_CASE("neighbour count grows with the stratum unless fixed") {
  const auto data = coin_treatment_data(20000, 1.0, 6);
  const std::vector<double> q{0.0};
  const FitConfig automatic;
  const auto n_auto = OutcomeSampler(data, 0, automatic).neighbourhood(q, {}, 1.0).first.size();
  std::size_t arm = 0;
  for (double v : data.a) arm += v == 1.0;
  CHECK(n_auto == static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(arm), 0.8))));
  FitConfig fixed;
  fixed.knn_k = 250;
  CHECK(OutcomeSampler(data, 0, fixed).neighbourhood(q, {}, 1.0).first.size() == 250);
}

TEST_CASE("local slope removes a linear trend in the neighbourhood") {
  // y = 2 + 3x exactly: recentred neighbours all equal the value at the query
  std::vector<double> x, a, m, y;
  for (int i = 0; i < 400; ++i) {
    const double xi = -1.0 + 2.0 * i / 399.0;
    x.push_back(xi);
    a.push_back(1.0);
    m.push_back(0.0);
    y.push_back(2.0 + 3.0 * xi);
  }
  const auto data = one_mediator(x, a, m, y);
  FitConfig cfg;
  cfg.knn_k = 100;
  const std::vector<double> edge{-1.0};
  const auto [ys, h] = OutcomeSampler(data, 0, cfg).neighbourhood(edge, {}, 1.0);
  for (double v : ys) CHECK(v == doctest::Approx(-1.0).epsilon(1e-9));
  cfg.local_linear = false;
  const auto raw = OutcomeSampler(data, 0, cfg).neighbourhood(edge, {}, 1.0).first;
  double mean = 0.0;
  for (double v : raw) mean += v / static_cast<double>(raw.size());
  CHECK(mean > -0.5);  // one-sided neighbours are biased upwards at the left edge
}

TEST_CASE("outcome sampler recovers a conditional mean") {
  const auto data = coin_treatment_data(50000, 1.0, 11);
  const FitConfig cfg;
  const OutcomeSampler sampler(data, 0, cfg);
  for (double x0 : {-0.5, 0.0, 0.4}) {
    const std::vector<double> q{x0};
    const auto s = sampler(q, {}, 1.0, 10000, 5);
    CHECK(std::abs(s.mean() - std::sin(x0)) <= 0.05);
  }
}

TEST_CASE("sampler is deterministic per seed and sorted") {
  const auto data = coin_treatment_data(5000, 1.0, 2);
  const FitConfig cfg;
  const OutcomeSampler sampler(data, 1, cfg);
  const std::vector<double> q{0.3};
  const std::vector<double> m{1.0};
  const auto s1 = sampler(q, m, 0.0, 1000, 42);
  const auto s2 = sampler(q, m, 0.0, 1000, 42);
  const auto s3 = sampler(q, m, 0.0, 1000, 43);
  CHECK(std::equal(s1.values().begin(), s1.values().end(), s2.values().begin()));
  CHECK_FALSE(std::equal(s1.values().begin(), s1.values().end(), s3.values().begin()));
  CHECK(std::is_sorted(s1.values().begin(), s1.values().end()));
}

TEST_CASE("propensity of an independent coin is one half in every bin") {
  const auto data = coin_treatment_data(50000, 1.0, 4);
  const FitConfig cfg;
  const PropensityEstimator prop(data, cfg);
  for (int b = 0; b < cfg.x_bins; ++b) {
    const std::vector<double> x{-0.95 + 0.1 * b};
    const auto [p, fallback] = prop(1.0, x);
    CHECK_FALSE(fallback);
    CHECK(std::abs(p - 0.5) <= 0.02);
  }
}

TEST_CASE("propensity follows the sigmoid trend of setting (i)") {
  auto scm = ScmConfig::preset("setting_i", TreatmentKind::discrete);
  scm.seed = 5;
  const auto data = ObservedData::from_dataset(sample_dataset(scm, 50000), scm.treatment);
  const FitConfig cfg;
  const PropensityEstimator prop(data, cfg);
  double previous = 0.0;
  for (int b = 0; b < cfg.x_bins; ++b) {
    const std::vector<double> x{-0.95 + 0.1 * b};
    const double p = prop(1.0, x).first;
    CHECK(p > previous);
    previous = p;
  }
}

TEST_CASE("propensity is clipped away from one") {
  const auto data = one_mediator({-1.0, -0.9, 0.9, 1.0}, {1, 1, 0, 1}, {0, 1, 0, 1}, {0, 0, 0, 0});
  FitConfig cfg;
  cfg.x_bins = 2;
  const PropensityEstimator prop(data, cfg);
  const std::vector<double> left{-0.95};
  CHECK(prop(1.0, left).first == 1.0 - kPropensityClip);
  CHECK(prop(0.0, left).first == kPropensityClip);
}

TEST_CASE("continuous treatments weight the pmf by a kernel on a") {
  auto scm = ScmConfig::preset("setting_i", TreatmentKind::continuous);
  scm.seed = 8;
  const auto data = ObservedData::from_dataset(sample_dataset(scm, 20000), scm.treatment);
  const FitConfig cfg;
  FittedModel model(data, cfg);
  CHECK_FALSE(model.propensity(0.5, std::vector<double>{0.0}).has_value());
  const std::vector<double> x{0.5};
  const auto pmf = model.mediator_pmf(1, x, {}, 0.6);
  CHECK(pmf.size() == 2);
  // at x = 0.5 and a = 0.6 the mediator signal is sin-dominated and positive
  CHECK(pmf.probs()[1] > 0.9);
}

TEST_CASE("plug-in bounds at gamma one are consistent on unconfounded data") {
  auto scm = ScmConfig::preset("setting_i", TreatmentKind::discrete);
  scm.gamma_y = 0.0;
  scm.seed = 21;
  const auto data = ObservedData::from_dataset(sample_dataset(scm, 200000), scm.treatment);
  const FitConfig cfg;
  FittedModel model(data, cfg);
  SensitivitySpec spec;
  spec.set_weighted("Y", 1.0, WeightFn::propensity());
  for (double x0 : {-0.5, 0.0, 0.5}) {
    CausalQuery q;
    q.x = {x0};
    q.treatments = {1.0};
    const auto r = compute_bounds(model, q, spec, BoundOptions{100000, 3, 1});
    CHECK(r.upper == r.lower);
    const double truth = oracle_effect(scm, q, 400000, 17);
    CHECK(std::abs(r.upper - truth) <= 0.05);
  }
}
