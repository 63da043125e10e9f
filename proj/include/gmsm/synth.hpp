#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "gmsm/bounds.hpp"
#include "gmsm/model.hpp"

namespace gmsm {

// Synthetic SCM with covariate X ~ U[-1, 1], hidden binary confounders
// U_M1, U_M2, U_Y ~ Bern(0.5), a binary or Beta-distributed treatment,
// binary mediators M1, M2 and a real outcome Y.
struct ScmConfig {
  TreatmentKind treatment = TreatmentKind::discrete;
  double gamma_m1 = 0.0;
  double gamma_m2 = 0.0;
  double gamma_y = 0.0;
  double rho_m1 = 0.2;
  double rho_m2 = 0.2;
  double rho_y = 1.0;
  // Hidden confounders only act on the treatment where x < 0.
  bool negative_x_only = false;
  std::uint64_t seed = 0;

  void validate() const;

  // setting_i, setting_ii, setting_iii or setting_i_weighted (continuous only).
  static ScmConfig preset(std::string_view name, TreatmentKind kind);
};

inline constexpr std::string_view kPresetNames[] = {"setting_i", "setting_ii", "setting_iii",
                                                    "setting_i_weighted"};

struct Dataset {
  std::vector<double> x, a, m1, m2, y;
  std::vector<double> u_m1, u_m2, u_y;

  std::size_t size() const noexcept { return x.size(); }
};

// Rows are generated in fixed-size chunks; every (column, chunk) pair owns
// an engine seeded from config.seed, so the output does not depend on
// `threads`. Throws NumericError if a Beta shape parameter is not positive.
Dataset sample_dataset(const ScmConfig& config, std::size_t n, unsigned threads = 1);

// Columns x, a, m1, m2, y [, u_m1, u_m2, u_y] with 17 significant digits.
void write_csv(std::ostream& out, const Dataset& data, bool include_hidden = true);

double f_m1(double x, double a, double u, double eps, double rho);
double f_m2(double x, double a, double m1, double u, double eps, double rho);
double f_y(double x, double a, double m1, double m2, double u, double eps, double rho);

// Beta shape alpha = beta of the continuous treatment given x and U.
double beta_shape(const ScmConfig& config, double x, double u_m1, double u_m2, double u_y);

// P(A = a | x, u) for binary treatments, the Beta density at a otherwise.
double treatment_likelihood(const ScmConfig& config, double a, double x, double u_m1,
                            double u_m2, double u_y);

// Monte Carlo value of the query under do-interventions: M_i receives a_i
// and every node after the last mediator receives a_{l+1}. Mediator labels
// are taken positionally (first M1, then M2).
double oracle_effect(const ScmConfig& config, const CausalQuery& query, std::size_t n_mc,
                     std::uint64_t seed, unsigned threads = 1);

struct OracleGamma {
  double propensity;  // P(a | x), a density for continuous treatments
  double r_plus;
  double r_minus;
  double gamma_plus;
  double gamma_minus;
  double gamma_star;
};

// Oracle sensitivity parameter for node M1, M2 or Y at (x, a), computed
// exactly by enumerating the hidden confounders.
OracleGamma oracle_gamma(const ScmConfig& config, std::string_view node, double x, double a);

// Same quantity from n_mc simulated rows: x is binned into `x_bins` equal
// bins and continuous densities use a Gaussian kernel per (bin, u).
OracleGamma oracle_gamma_mc(const ScmConfig& config, std::string_view node, double x, double a,
                            std::size_t n_mc, std::uint64_t seed, int x_bins = 64);

// Inverts observed ratio extremes into the sensitivity parameter.
OracleGamma invert_ratios(TreatmentKind kind, double propensity, double r_plus, double r_minus);

// Query and configuration used for one benchmark setting.
struct BenchmarkSetting {
  std::string name;
  ScmConfig scm;
  std::vector<double> treatments;
  std::vector<std::string> mediators;
};

BenchmarkSetting benchmark_setting(std::string_view preset, TreatmentKind kind);

}  // namespace gmsm
