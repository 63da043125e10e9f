#include <stdexcept>
#include <cmath>
#include <random>

#include "doctest.h"
#include "gmsm/shift.hpp"

using namespace gmsm;

namespace {

const RatioBounds kTwo = RatioBounds::from_weighted(2.0, 0.0);

std::vector<double> random_pmf(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(n);
  double total = 0.0;
  for (double& x : w) {
    x = u(rng) < 0.1 ? 0.0 : u(rng);
    total += x;
  }
  if (total == 0.0) {
    w[0] = 1.0;
    total = 1.0;
  }
  for (double& x : w) x /= total;
  return w;
}

}  // namespace

TEST_CASE("uniform pmf shifts per branch") {
  const DiscreteDist d({1, 2, 3, 4}, {0.25, 0.25, 0.25, 0.25});
  const auto up = shift_discrete(d, kTwo, Direction::upper);
  const double expect_up[] = {0.125, 0.125, 0.25, 0.5};
  for (int i = 0; i < 4; ++i) CHECK(up.probs()[i] == doctest::Approx(expect_up[i]));
  const auto lo = shift_discrete(d, kTwo, Direction::lower);
  const double expect_lo[] = {0.5, 0.25, 0.125, 0.125};
  for (int i = 0; i < 4; ++i) CHECK(lo.probs()[i] == doctest::Approx(expect_lo[i]));
}

TEST_CASE("boundary point exactly at the quantile uses the straddle value") {
  // F(2) = 2/3 = c+ exactly
  const double third = 1.0 / 3.0;
  const auto up = shift_masses(std::vector<double>{third, third, third}, kTwo, Direction::upper);
  CHECK(up[0] == doctest::Approx(third / 2));
  CHECK(up[1] == doctest::Approx(third / 2));
  CHECK(up[2] == doctest::Approx(third / 0.5));
}

TEST_CASE("identity shift at gamma one") {
  const DiscreteDist d({0, 1, 5}, {0.2, 0.3, 0.5});
  const auto id = RatioBounds::from_weighted(1.0, 0.0);
  const auto out = shift_discrete(d, id, Direction::upper);
  for (std::size_t i = 0; i < 3; ++i) CHECK(out.probs()[i] == d.probs()[i]);
  CHECK(shift_cdf_value(0.37, id, Direction::lower) == 0.37);
}

TEST_CASE("unnormalized input is rejected") {
  CHECK_THROWS_AS(shift_masses(std::vector<double>{0.5, 0.6}, kTwo, Direction::upper),
                  std::invalid_argument);
}

TEST_CASE("continuous shift on a standard normal") {
  const auto n = AnalyticDist::standard_normal();
  const double w = normal_quantile(2.0 / 3.0);
  const double f = shift_cdf([&](double v) { return n.cdf(v); }, kTwo, Direction::upper, w);
  CHECK(f == doctest::Approx(1.0 / 3.0));
  CHECK(shift_cdf_value(1.0, kTwo, Direction::upper) == doctest::Approx(1.0));
  CHECK(shift_cdf_value(1.0, kTwo, Direction::lower) == doctest::Approx(1.0));
  CHECK(shift_cdf_value(0.0, kTwo, Direction::upper) == 0.0);

  const ShiftedCdf up(n, kTwo, Direction::upper);
  CHECK(up.quantile(0.5) == doctest::Approx(0.6744897501960817).epsilon(1e-9));
  const ShiftedCdf lo(n, kTwo, Direction::lower);
  CHECK(lo.quantile(0.5) == doctest::Approx(-0.6744897501960817).epsilon(1e-9));
}

TEST_CASE("unshift inverts the shift map") {
  for (double g : {1.3, 2.0, 9.0}) {
    const auto rb = RatioBounds::from_weighted(g, 0.2);
    for (double f = 0.0; f <= 1.0; f += 0.05) {
      for (auto dir : {Direction::upper, Direction::lower}) {
        CHECK(unshift_cdf_level(shift_cdf_value(f, rb, dir), rb, dir) ==
              doctest::Approx(f).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("normalization and ratio containment over random pmfs") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> gam(1.0, 20.0), q(0.0, 1.0);
  std::uniform_int_distribution<int> len(2, 20);
  for (int rep = 0; rep < 2000; ++rep) {
    const auto p = random_pmf(rng, static_cast<std::size_t>(len(rng)));
    const auto rb = RatioBounds::from_weighted(gam(rng), rep % 2 ? q(rng) : 0.0);
    for (auto dir : {Direction::upper, Direction::lower}) {
      const auto out = shift_masses(p, rb, dir);
      double total = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        total += out[i];
        CHECK(out[i] >= p[i] / rb.s_plus - 1e-15);
        CHECK(out[i] <= p[i] / rb.s_minus + 1e-15);
      }
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("stochastic dominance and monotonicity in gamma") {
  const double gammas[] = {1.0, 1.2, 1.5, 2.0, 3.0, 5.0, 10.0};
  for (double f = 0.0; f <= 1.0; f += 0.01) {
    double prev_up = 2.0;
    double prev_lo = -1.0;
    for (double g : gammas) {
      const auto rb = RatioBounds::from_weighted(g, 0.0);
      const double up = shift_cdf_value(f, rb, Direction::upper);
      const double lo = shift_cdf_value(f, rb, Direction::lower);
      CHECK(up <= f + 1e-12);
      CHECK(lo >= f - 1e-12);
      CHECK(up <= prev_up + 1e-12);
      CHECK(lo >= prev_lo - 1e-12);
      prev_up = up;
      prev_lo = lo;
    }
  }
}
