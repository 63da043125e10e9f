#include "gmsm/benchmark.hpp"

#include <algorithm>
#include <limits>
#include <memory>
#include <stdexcept>

#include "gmsm/parallel.hpp"
#include "gmsm/random.hpp"

namespace gmsm {

namespace {

double node_treatment(const BenchmarkSetting& s, const std::string& node) {
  for (std::size_t i = 0; i < s.mediators.size(); ++i) {
    if (s.mediators[i] == node) return s.treatments[i];
  }
  return s.treatments.back();
}

CausalQuery make_query(const BenchmarkSetting& s, double x, const Functional& f) {
  CausalQuery q;
  q.x = {x};
  q.treatments = s.treatments;
  q.mediators = s.mediators;
  q.functional = f;
  return q;
}

FittedModel* fit(const BenchmarkSetting& s, const ValidationOptions& opts,
                 std::unique_ptr<FittedModel>& holder) {
  ScmConfig scm = s.scm;
  scm.seed = mix_seed(opts.seed, fnv1a("benchmark-data"));
  const Dataset data = sample_dataset(scm, opts.n, opts.threads);
  holder = std::make_unique<FittedModel>(ObservedData::from_dataset(data, scm.treatment),
                                         opts.fit);
  return holder.get();
}

}  // namespace

std::vector<double> x_grid(int points) {
  if (points < 2) throw std::invalid_argument("grid needs at least two points");
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int j = 0; j < points; ++j) g[static_cast<std::size_t>(j)] = -1.0 + 2.0 * j / (points - 1);
  return g;
}

WeightFn benchmark_weight(TreatmentKind kind) {
  return kind == TreatmentKind::discrete ? WeightFn::propensity() : WeightFn::zero();
}

WeightFn positive_x_weight() {
  RegionTable<double> table;
  Region positive;
  positive.x = {Interval{0.0, std::numeric_limits<double>::infinity()}};
  table.cells.push_back({positive, 1.0});
  table.fallback = 0.0;
  return WeightFn::table(std::move(table));
}

double max_oracle_gamma(const BenchmarkSetting& s, const std::string& node,
                        const std::vector<double>& grid) {
  const double a = node_treatment(s, node);
  double best = 1.0;
  for (double x : grid) best = std::max(best, oracle_gamma(s.scm, node, x, a).gamma_star);
  return best;
}

ValidationReport validate_setting(const BenchmarkSetting& s, const ValidationOptions& opts) {
  ValidationReport report{s.name, s.scm.treatment, {}, {}, 0.0, false};
  const std::vector<double> grid = x_grid(opts.grid_points);

  SensitivitySpec spec;
  std::vector<std::string> nodes = s.mediators;
  nodes.push_back("Y");
  for (const auto& node : nodes) {
    const double gamma = opts.gamma_margin * max_oracle_gamma(s, node, grid);
    spec.set_weighted(node, gamma, benchmark_weight(s.scm.treatment));
    report.gammas[node] = gamma;
  }

  std::unique_ptr<FittedModel> holder;
  const FittedModel& model = *fit(s, opts, holder);
  BoundOptions bopts{opts.k, mix_seed(opts.seed, fnv1a("benchmark-bounds")), 1};
  report.grid.resize(grid.size());
  parallel_for(grid.size(), opts.threads, [&](std::size_t j) {
    const CausalQuery q = make_query(s, grid[j], opts.functional);
    const BoundsResult r = compute_bounds(model, q, spec, bopts);
    const double truth = oracle_effect(s.scm, q, opts.n_mc, mix_seed(opts.seed, j));
    const bool covered = truth >= r.lower - opts.delta && truth <= r.upper + opts.delta;
    report.grid[j] = {grid[j], truth, r.lower, r.upper, covered};
  });
  const auto hits = std::count_if(report.grid.begin(), report.grid.end(),
                                  [](const GridRecord& g) { return g.covered; });
  report.coverage = static_cast<double>(hits) / static_cast<double>(grid.size());
  report.passed = report.coverage >= opts.required_coverage;
  return report;
}

std::vector<WeightedRow> weighted_experiment(const std::vector<double>& gammas,
                                             const ValidationOptions& opts) {
  const BenchmarkSetting s = benchmark_setting("setting_i_weighted", TreatmentKind::continuous);
  const std::vector<double> grid = x_grid(opts.grid_points);
  std::unique_ptr<FittedModel> holder;
  const FittedModel& model = *fit(s, opts, holder);
  BoundOptions bopts{opts.k, mix_seed(opts.seed, fnv1a("benchmark-bounds")), 1};

  std::vector<double> truth(grid.size());
  parallel_for(grid.size(), opts.threads, [&](std::size_t j) {
    truth[j] = oracle_effect(s.scm, make_query(s, grid[j], opts.functional), opts.n_mc,
                             mix_seed(opts.seed, j));
  });

  std::vector<WeightedRow> rows;
  for (double gamma : gammas) {
    SensitivitySpec plain;
    plain.set_weighted("Y", gamma, WeightFn::zero());
    SensitivitySpec weighted;
    weighted.set_weighted("Y", gamma, positive_x_weight());
    std::vector<double> len_p(grid.size()), len_w(grid.size());
    std::vector<int> cov_p(grid.size()), cov_w(grid.size());
    parallel_for(grid.size(), opts.threads, [&](std::size_t j) {
      const CausalQuery q = make_query(s, grid[j], opts.functional);
      const BoundsResult p = compute_bounds(model, q, plain, bopts);
      const BoundsResult w = compute_bounds(model, q, weighted, bopts);
      len_p[j] = p.upper - p.lower;
      len_w[j] = w.upper - w.lower;
      cov_p[j] = truth[j] >= p.lower && truth[j] <= p.upper;
      cov_w[j] = truth[j] >= w.lower && truth[j] <= w.upper;
    });
    const double n = static_cast<double>(grid.size());
    WeightedRow row{gamma, 0, 0, 0, 0};
    for (std::size_t j = 0; j < grid.size(); ++j) {
      row.length_unweighted += len_p[j] / n;
      row.length_weighted += len_w[j] / n;
      row.coverage_unweighted += cov_p[j] / n;
      row.coverage_weighted += cov_w[j] / n;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace gmsm
