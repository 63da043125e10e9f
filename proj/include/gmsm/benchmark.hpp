#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gmsm/bounds.hpp"
#include "gmsm/estimate.hpp"
#include "gmsm/synth.hpp"

namespace gmsm {

// Shared driver for validating bounds against the synthetic oracle.
struct ValidationOptions {
  std::size_t n = 50000;
  int grid_points = 21;
  std::size_t k = 10000;
  std::size_t n_mc = 1'000'000;
  double gamma_margin = 1.05;  // Gamma_W = margin * max over the grid of the oracle Gamma*_W
  double delta = 0.05;
  double required_coverage = 0.9;
  Functional functional;
  FitConfig fit;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct GridRecord {
  double x;
  double oracle;
  double lower;
  double upper;
  bool covered;
};

struct ValidationReport {
  std::string setting;
  TreatmentKind treatment;
  std::map<std::string, double> gammas;  // sensitivity parameter used per node
  std::vector<GridRecord> grid;
  double coverage = 0.0;
  bool passed = false;
};

std::vector<double> x_grid(int points);

// Weight of the benchmark sensitivity model: MSM for binary treatments,
// CMSM for continuous ones.
WeightFn benchmark_weight(TreatmentKind kind);

// Largest oracle Gamma* of `node` over the grid at the node's treatment.
double max_oracle_gamma(const BenchmarkSetting& setting, const std::string& node,
                        const std::vector<double>& grid);

ValidationReport validate_setting(const BenchmarkSetting& setting, const ValidationOptions& opts);

struct WeightedRow {
  double gamma;
  double length_unweighted;
  double length_weighted;
  double coverage_unweighted;
  double coverage_weighted;
};

// Interval lengths on the x < 0 confounded variant of setting (i), with and
// without the weight q_Y(x) = 1(x > 0), averaged over the grid.
std::vector<WeightedRow> weighted_experiment(const std::vector<double>& gammas,
                                             const ValidationOptions& opts);

// Weight table q(x) = 1(x > 0).
WeightFn positive_x_weight();

}  // namespace gmsm
