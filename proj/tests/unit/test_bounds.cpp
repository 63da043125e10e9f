#include <stdexcept>
#include <boost/random/normal_distribution.hpp>
#include <cmath>
#include <random>

#include "doctest.h"
#include "gmsm/bounds.hpp"
#include "gmsm/random.hpp"
#include "support/oracles.hpp"

using namespace gmsm;

namespace {

// Binary mediator with P(M=1) = p1; Y | m is a fixed discrete pmf.
struct ChainInstance {
  double p1;
  std::vector<DiscreteDist> outcome;  // indexed by m
};

CallbackModel chain_model(const ChainInstance& inst, std::vector<double> m_support = {0, 1}) {
  return CallbackModel(
      TreatmentKind::discrete,
      [inst, m_support](std::span<const double>, std::span<const double> m, double, std::size_t,
                        std::uint64_t) -> OutcomeDist {
        const std::size_t idx = m[0] == m_support[0] ? 0 : 1;
        return inst.outcome[idx];
      },
      [inst, m_support](std::size_t, std::span<const double>, std::span<const double>, double) {
        return DiscreteDist(m_support, {1 - inst.p1, inst.p1});
      });
}

CausalQuery chain_query() {
  CausalQuery q;
  q.x = {0.0};
  q.treatments = {1, 1};
  q.mediators = {"M1"};
  return q;
}

SensitivitySpec cmsm(double gamma_m, double gamma_y) {
  SensitivitySpec spec;
  spec.set_weighted("M1", gamma_m, WeightFn::zero());
  spec.set_weighted("Y", gamma_y, WeightFn::zero());
  return spec;
}

DiscreteDist point(double v) { return DiscreteDist({v}, {1.0}); }

}  // namespace

TEST_CASE("hand trace of the mediator recursion") {
  const ChainInstance inst{0.5, {point(1.0), point(3.0)}};
  const auto model = chain_model(inst);
  const auto r = compute_bounds(model, chain_query(), cmsm(2.0, 3.0));
  CHECK(r.upper == doctest::Approx(2.5));
  CHECK(r.lower == doctest::Approx(1.5));
  CHECK(r.nodes.size() == 2);
  CHECK(r.outcome_cells == 2);
  CHECK(mediator_step(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 3.0},
                      RatioBounds::from_weighted(2.0, 0.0), Direction::upper) ==
        doctest::Approx(2.5));
}

TEST_CASE("unconfounded chain equals the plug-in mediation formula") {
  const ChainInstance inst{0.3, {DiscreteDist({0, 1, 2}, {0.2, 0.5, 0.3}),
                                 DiscreteDist({0, 1, 2}, {0.6, 0.3, 0.1})}};
  const auto r = compute_bounds(chain_model(inst), chain_query(), cmsm(1.0, 1.0));
  const double plug = 0.7 * 1.1 + 0.3 * 0.5;
  CHECK(r.upper == doctest::Approx(plug));
  CHECK(r.lower == doctest::Approx(plug));
}

TEST_CASE("constant downstream values ignore the mediator gamma") {
  const ChainInstance inst{0.4, {point(2.0), point(2.0)}};
  for (double g : {1.0, 2.0, 10.0}) {
    const auto r = compute_bounds(chain_model(inst), chain_query(), cmsm(g, 1.0));
    CHECK(r.upper == doctest::Approx(2.0));
    CHECK(r.lower == doctest::Approx(2.0));
  }
}

TEST_CASE("relabeling the mediator support leaves the bounds unchanged") {
  const ChainInstance inst{0.35, {DiscreteDist({0, 4}, {0.5, 0.5}), point(1.0)}};
  const ChainInstance swapped{0.65, {point(1.0), DiscreteDist({0, 4}, {0.5, 0.5})}};
  const auto a = compute_bounds(chain_model(inst), chain_query(), cmsm(2.5, 1.7));
  const auto b = compute_bounds(chain_model(swapped, {-3, 8}), chain_query(), cmsm(2.5, 1.7));
  CHECK(a.upper == doctest::Approx(b.upper).epsilon(1e-14));
  CHECK(a.lower == doctest::Approx(b.lower).epsilon(1e-14));
}

TEST_CASE("mediator recursion matches a grid search over the polytopes") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0), gam(1.0, 6.0);
  std::uniform_int_distribution<int> len(1, 5);
  for (int rep = 0; rep < 100; ++rep) {
    ChainInstance inst{0.05 + 0.9 * u(rng), {}};
    for (int m = 0; m < 2; ++m) {
      const auto n = static_cast<std::size_t>(len(rng));
      std::vector<double> support(n), w(n);
      double v = -3 + 2 * u(rng);
      for (std::size_t i = 0; i < n; ++i) {
        support[i] = v;
        v += 0.1 + u(rng);
        w[i] = 0.05 + u(rng);
      }
      inst.outcome.push_back(DiscreteDist::from_weights(support, w));
    }
    const double gm = gam(rng);
    const double gy = gam(rng);
    const auto r = compute_bounds(chain_model(inst), chain_query(), cmsm(gm, gy));
    const auto rm = RatioBounds::from_weighted(gm, 0.0);
    const auto ry = RatioBounds::from_weighted(gy, 0.0);
    for (bool upper : {true, false}) {
      double v[2];
      for (int m = 0; m < 2; ++m) {
        const auto& d = inst.outcome[static_cast<std::size_t>(m)];
        v[m] = oracle::vertex_mean({d.support().begin(), d.support().end()},
                                   {d.probs().begin(), d.probs().end()}, ry.s_minus,
                                   ry.s_plus, upper);
      }
      const double brute = oracle::grid_mediator_bound(inst.p1, v[0], v[1], rm.s_minus,
                                                       rm.s_plus, upper, 1e-3);
      CHECK(std::abs((upper ? r.upper : r.lower) - brute) <= 5e-3);
    }
  }
}

TEST_CASE("no-mediator bound on a discrete outcome") {
  CallbackModel model(TreatmentKind::discrete,
                      [](std::span<const double>, std::span<const double>, double, std::size_t,
                         std::uint64_t) -> OutcomeDist {
                        return DiscreteDist({1, 2, 3, 4}, {0.25, 0.25, 0.25, 0.25});
                      });
  CausalQuery q;
  q.x = {0.0};
  q.treatments = {1};
  SensitivitySpec spec;
  spec.set_explicit("Y", 0.5, 2.0);
  CHECK(bound_no_mediators(model, q, spec, Direction::upper) == doctest::Approx(3.125));
  CHECK(bound_no_mediators(model, q, spec, Direction::lower) == doctest::Approx(1.875));
  CHECK_THROWS_AS(bound_with_mediators(model, q, spec, Direction::upper),
                  std::invalid_argument);
}

namespace {

// Y | x, a ~ N(x + a, 1), sampled from the supplied seed.
CallbackModel gaussian_model() {
  return CallbackModel(
      TreatmentKind::discrete,
      [](std::span<const double> x, std::span<const double>, double a, std::size_t k,
         std::uint64_t seed) -> OutcomeDist {
        Engine eng = make_engine(seed);
        boost::random::normal_distribution<double> z(x[0] + a, 1.0);
        std::vector<double> v(k);
        for (double& y : v) y = z(eng);
        return SampleDist::from_unsorted(std::move(v));
      },
      {}, [](double a, std::span<const double>) -> std::optional<double> {
        return a == 1 ? 0.4 : 0.6;
      });
}

}  // namespace

TEST_CASE("sampled outcome collapses at gamma one and nests in gamma") {
  const auto model = gaussian_model();
  CausalQuery q;
  q.x = {0.3};
  q.treatments = {1};
  BoundOptions opts;
  opts.k = 5000;
  opts.seed = 42;
  double prev_lo = 1e9;
  double prev_up = -1e9;
  for (double g : {1.0, 1.1, 1.25, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0, 10.0}) {
    SensitivitySpec spec;
    spec.set_weighted("Y", g, WeightFn::propensity());
    const auto r = compute_bounds(model, q, spec, opts);
    if (g == 1.0) {
      CHECK(r.lower == r.upper);
      CHECK(r.upper == doctest::Approx(1.3).epsilon(0.05));
    }
    CHECK(r.lower <= r.upper);
    CHECK(r.lower <= prev_lo + 2.0 / std::sqrt(5000.0));
    CHECK(r.upper >= prev_up - 2.0 / std::sqrt(5000.0));
    CHECK(r.nodes[0].propensity.value() == 0.4);
    prev_lo = r.lower;
    prev_up = r.upper;
  }
}

TEST_CASE("averages and differences") {
  CallbackModel model(TreatmentKind::discrete,
                      [](std::span<const double> x, std::span<const double>, double a,
                         std::size_t, std::uint64_t) -> OutcomeDist { return point(x[0] + a); });
  CausalQuery q;
  q.treatments = {0};
  SensitivitySpec spec;
  spec.set_weighted("Y", 2.0, WeightFn::zero());
  const auto avg = bound_average(model, q, spec, {{1.0}, {3.0}});
  CHECK(avg.lower == doctest::Approx(2.0));
  CHECK(avg.upper == doctest::Approx(2.0));
  CHECK_THROWS_AS(bound_average(model, q, spec, {}), std::invalid_argument);

  const auto gm = gaussian_model();
  CausalQuery one;
  one.x = {0.0};
  one.treatments = {1};
  SensitivitySpec wide;
  wide.set_weighted("Y", 2.0, WeightFn::zero());
  BoundOptions opts;
  opts.k = 4000;
  const auto single = bound_average(gm, one, wide, {{0.0}}, opts);
  const auto direct = compute_bounds(gm, one, wide, opts);
  CHECK(single.lower == direct.lower);
  CHECK(single.upper == direct.upper);

  const auto self = bound_difference(gm, one, one, wide, opts);
  CHECK(self.lower == doctest::Approx(direct.lower - direct.upper));
  CHECK(self.upper == doctest::Approx(direct.upper - direct.lower));
  CHECK(self.lower <= 0.0);
  CHECK(self.upper >= 0.0);

  CausalQuery zero = one;
  zero.treatments = {0};
  SensitivitySpec none;
  none.set_weighted("Y", 1.0, WeightFn::zero());
  const auto point_diff = bound_difference(gm, one, zero, none, opts);
  CHECK(point_diff.lower == point_diff.upper);
  CHECK(point_diff.upper == doctest::Approx(1.0).epsilon(0.1));

  CausalQuery other_x = zero;
  other_x.x = {0.5};
  CHECK_THROWS_AS(bound_difference(gm, one, other_x, none, opts), std::invalid_argument);
}

TEST_CASE("results do not depend on the thread count") {
  const auto model = gaussian_model();
  CausalQuery q;
  q.treatments = {1};
  SensitivitySpec spec;
  spec.set_weighted("Y", 2.0, WeightFn::zero());
  std::vector<std::vector<double>> xs;
  for (int i = 0; i < 9; ++i) xs.push_back({-1.0 + 0.25 * i});
  BoundOptions one{2000, 7, 1};
  BoundOptions four{2000, 7, 4};
  const auto a = bound_average(model, q, spec, xs, one);
  const auto b = bound_average(model, q, spec, xs, four);
  CHECK(a.lower == b.lower);
  CHECK(a.upper == b.upper);
}

TEST_CASE("query shape is validated") {
  const auto model = gaussian_model();
  CausalQuery q;
  q.x = {0.0};
  q.treatments = {1, 0};
  SensitivitySpec spec;
  spec.set_weighted("Y", 2.0, WeightFn::zero());
  CHECK_THROWS_AS(compute_bounds(model, q, spec), std::invalid_argument);
  q.treatments = {1};
  SensitivitySpec empty;
  CHECK_THROWS_AS(compute_bounds(model, q, empty), std::invalid_argument);
}
