#include <stdexcept>
#include <cmath>
#include <random>

#include "doctest.h"
#include "gmsm/model.hpp"

using namespace gmsm;

TEST_CASE("weighted bounds for the CMSM weight") {
  const RatioBounds rb = RatioBounds::from_weighted(2.0, 0.0);
  CHECK(rb.s_minus == doctest::Approx(0.5));
  CHECK(rb.s_plus == doctest::Approx(2.0));
  CHECK(rb.c_plus == doctest::Approx(2.0 / 3.0));
  CHECK(rb.c_minus == doctest::Approx(1.0 / 3.0));
  CHECK_FALSE(rb.identity());
}

TEST_CASE("MSM weight uses the propensity") {
  SensitivitySpec spec;
  spec.set_weighted("Y", 2.0, WeightFn::propensity());
  const RatioBounds rb = ratio_bounds(spec, "Y", 0.5);
  CHECK(rb.s_minus == doctest::Approx(1.0 / 1.5));
  CHECK(rb.s_plus == doctest::Approx(1.0 / 0.75));
  CHECK(rb.c_plus == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(ratio_bounds(spec, "Y"), std::invalid_argument);
  CHECK_THROWS_AS(ratio_bounds(spec, "Y", 1.5), std::invalid_argument);
}

TEST_CASE("gamma of one is the identity for any weight") {
  for (double q : {0.0, 0.3, 1.0}) {
    const RatioBounds rb = RatioBounds::from_weighted(1.0, q);
    CHECK(rb.s_minus == 1.0);
    CHECK(rb.s_plus == 1.0);
    CHECK(rb.identity());
    CHECK(std::isnan(rb.c_plus));
  }
}

TEST_CASE("q of one also degenerates") {
  CHECK(RatioBounds::from_weighted(5.0, 1.0).identity());
}

TEST_CASE("invalid inputs are rejected") {
  CHECK_THROWS_AS(RatioBounds::from_weighted(0.9, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(RatioBounds::from_weighted(2.0, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(RatioBounds::from_ratios(1.2, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(RatioBounds::from_ratios(0.5, 0.9), std::invalid_argument);
  SensitivitySpec spec;
  CHECK_THROWS_AS(spec.set_weighted("Y", 0.5, WeightFn::zero()), std::invalid_argument);
  CHECK_THROWS_AS(ratio_bounds(spec, "M1"), std::invalid_argument);
  CHECK_THROWS_AS(WeightFn::constant(1.5), std::invalid_argument);
}

TEST_CASE("explicit bounds use the general quantile formula") {
  const RatioBounds rb = RatioBounds::from_ratios(0.5, 2.0);
  CHECK(rb.c_plus == doctest::Approx(2.0 / 3.0));
  CHECK(rb.c_minus == doctest::Approx(1.0 / 3.0));
  const RatioBounds skew = RatioBounds::from_ratios(0.8, 3.0);
  CHECK(skew.c_plus / skew.s_plus + (1 - skew.c_plus) / skew.s_minus ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(skew.c_minus / skew.s_minus + (1 - skew.c_minus) / skew.s_plus ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("indicator table weights vary over x") {
  RegionTable<double> table;
  Region positive;
  positive.x = {Interval{0.0, std::numeric_limits<double>::infinity()}};
  table.cells.push_back({positive, 1.0});
  table.fallback = 0.0;
  SensitivitySpec spec;
  spec.set_weighted("Y", 2.0, WeightFn::table(table));
  const double xp[] = {0.5};
  const double xn[] = {-0.5};
  CHECK(ratio_bounds(spec, "Y", 0.0, xp, std::nullopt).identity());
  CHECK(ratio_bounds(spec, "Y", 0.0, xn, std::nullopt).s_plus == doctest::Approx(2.0));
}

TEST_CASE("explicit tables vary over a") {
  ExplicitEntry entry;
  Region high;
  high.a = Interval{0.5, 1.0};
  entry.bounds.cells.push_back({high, RatioPair{0.25, 4.0}});
  entry.bounds.fallback = RatioPair{0.5, 2.0};
  SensitivitySpec spec;
  spec.set("Y", entry);
  CHECK(ratio_bounds(spec, "Y", 1.0, {}, std::nullopt).s_plus == 4.0);
  CHECK(ratio_bounds(spec, "Y", 0.0, {}, std::nullopt).s_plus == 2.0);
}

TEST_CASE("sharpness diagnostic") {
  const RatioBounds msm = RatioBounds::from_weighted(2.0, 0.5);
  CHECK(is_sharp(msm, 0.5, TreatmentKind::discrete));
  const RatioBounds wide = RatioBounds::from_ratios(0.25, 4.0);
  CHECK_FALSE(is_sharp(wide, 0.5, TreatmentKind::discrete));
  CHECK(is_sharp(wide, 0.5, TreatmentKind::continuous));
}

TEST_CASE("closed-form quantiles over random gamma and q") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> g(1.0, 50.0), u(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double gamma = g(rng);
    const double q = u(rng);
    const RatioBounds rb = RatioBounds::from_weighted(gamma, q);
    REQUIRE(rb.s_minus <= 1.0);
    REQUIRE(rb.s_plus >= 1.0);
    if (rb.identity()) continue;
    CHECK(std::abs(rb.c_plus - gamma / (1 + gamma)) <= 1e-12);
    CHECK(std::abs(rb.c_plus + rb.c_minus - 1.0) <= 1e-12);
    CHECK(std::abs(rb.c_plus / rb.s_plus + (1 - rb.c_plus) / rb.s_minus - 1.0) <= 1e-12);
    CHECK(std::abs(rb.c_minus / rb.s_minus + (1 - rb.c_minus) / rb.s_plus - 1.0) <= 1e-12);
  }
}

TEST_CASE("c plus grows with gamma toward one") {
  double prev = 0.0;
  for (double gamma = 1.01; gamma < 1e6; gamma *= 1.7) {
    const double c = RatioBounds::from_weighted(gamma, 0.0).c_plus;
    CHECK(c >= prev);
    prev = c;
  }
  CHECK(prev > 0.99999);
}

TEST_CASE("with_gamma replaces only the weighted gamma") {
  SensitivitySpec spec;
  spec.set_weighted("Y", 2.0, WeightFn::zero());
  spec.set_explicit("M1", 0.5, 2.0);
  const SensitivitySpec wider = spec.with_gamma("Y", 4.0);
  CHECK(std::get<WeightedEntry>(wider.at("Y")).gamma == 4.0);
  CHECK(std::get<WeightedEntry>(spec.at("Y")).gamma == 2.0);
  CHECK_THROWS_AS(spec.with_gamma("M1", 3.0), std::invalid_argument);
}
