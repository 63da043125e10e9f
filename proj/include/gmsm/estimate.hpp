#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "gmsm/bounds.hpp"
#include "gmsm/synth.hpp"

namespace gmsm {

struct FitConfig {
  int x_bins = 20;                  // equal-width bins per covariate dimension
  std::size_t knn_k = 0;            // neighbours per outcome query; 0 uses ceil(N^0.8) of the stratum
  std::size_t min_cell_count = 30;  // smaller cells fall back to the marginal
  double a_bandwidth = 0.0;         // kernel width on a (continuous); 0 picks Silverman's rule
  bool local_linear = true;         // shift neighbour outcomes to the query along a fitted slope

  void validate() const;
};

inline constexpr double kPropensityClip = 1e-3;

// Observational columns with their roles. Mediators are causally ordered.
struct ObservedData {
  std::vector<std::vector<double>> x;  // one vector per covariate dimension
  std::vector<double> a;
  std::vector<std::vector<double>> mediators;
  std::vector<double> y;
  TreatmentKind treatment = TreatmentKind::discrete;

  std::size_t size() const noexcept { return a.size(); }
  // Throws DataError on empty or ragged columns and non-finite values.
  void validate() const;
  std::vector<double> row_x(std::size_t i) const;
  ObservedData subset(std::span<const std::size_t> rows) const;

  static ObservedData from_dataset(const Dataset& d, TreatmentKind kind,
                                   std::size_t mediator_count = 2);
};

// Equal-width bins over the observed range of each covariate; queries
// outside the range land in the edge bins.
class XBinner {
 public:
  XBinner() = default;
  XBinner(const ObservedData& data, int bins);
  std::size_t cell(std::span<const double> x) const;
  std::size_t cells() const noexcept { return cells_; }

 private:
  std::vector<double> lo_, width_;
  int bins_ = 1;
  std::size_t cells_ = 1;
};

struct PmfEstimate {
  DiscreteDist pmf;
  bool fallback;
};

// P(M_i | x, m_1..m_{i-1}, a) from counts in the (x-bin, exact prefix,
// exact or kernel-weighted a) cell, with add-one smoothing.
class PmfEstimator {
 public:
  PmfEstimator(const ObservedData& data, std::size_t mediator, const FitConfig& cfg);
  PmfEstimate operator()(std::span<const double> x, std::span<const double> prior,
                         double a) const;
  std::span<const double> support() const noexcept { return support_; }

 private:
  using Key = std::vector<double>;
  Key key(std::span<const double> x, std::span<const double> prior, std::optional<double> a) const;
  void check_prior(std::span<const double> prior) const;
  DiscreteDist smoothed(std::span<const double> weights) const;

  std::size_t mediator_;
  TreatmentKind kind_;
  FitConfig cfg_;
  XBinner binner_;
  std::vector<double> support_;
  std::vector<std::vector<double>> prior_support_;
  std::vector<double> a_support_;
  double a_bandwidth_ = 0.0;
  std::vector<double> marginal_counts_;
  // discrete a: counts per support value; continuous a: (a, support index) pairs
  std::map<Key, std::vector<double>> counts_;
  std::map<Key, std::vector<std::pair<double, std::size_t>>> rows_;
};

// Y | x, m_1..m_l, a by k-nearest-neighbour resampling within the exact
// (m, a) stratum (discrete a) or m stratum with a as a feature
// (continuous a), plus Gaussian jitter at Silverman's bandwidth of the
// neighbourhood.
class OutcomeSampler {
 public:
  OutcomeSampler(const ObservedData& data, std::size_t mediators, const FitConfig& cfg);
  SampleDist operator()(std::span<const double> x, std::span<const double> m, double a,
                        std::size_t k, std::uint64_t seed) const;

  // Neighbour outcomes and bandwidth used for a query.
  std::pair<std::vector<double>, double> neighbourhood(std::span<const double> x,
                                                       std::span<const double> m,
                                                       double a) const;

 private:
  std::size_t mediators_;
  TreatmentKind kind_;
  std::size_t knn_k_;
  bool local_linear_;
  std::vector<double> scale_;  // per feature: covariates, then a if continuous
  std::vector<std::vector<double>> features_;  // row-major
  std::vector<double> y_;
  std::map<std::vector<double>, std::vector<std::size_t>> strata_;
};

// Binned-x frequency estimate of P(a | x) for discrete treatments, clipped
// to [kPropensityClip, 1 - kPropensityClip].
class PropensityEstimator {
 public:
  PropensityEstimator(const ObservedData& data, const FitConfig& cfg);
  // Second member flags an empty bin answered by the marginal.
  std::pair<double, bool> operator()(double a, std::span<const double> x) const;

 private:
  XBinner binner_;
  std::vector<double> a_support_;
  std::vector<std::vector<double>> counts_;  // [bin][a index]
  std::vector<double> totals_;
  std::vector<double> marginal_;
  double n_ = 0.0;
};

struct FitDiagnostics {
  std::size_t pmf_fallbacks = 0;
  std::size_t propensity_fallbacks = 0;
  std::size_t outcome_queries = 0;
};

class FittedModel final : public ConditionalModel {
 public:
  FittedModel(const ObservedData& data, const FitConfig& cfg);

  TreatmentKind treatment_kind() const override { return kind_; }
  DiscreteDist mediator_pmf(std::size_t i, std::span<const double> x,
                            std::span<const double> prior, double a) const override;
  OutcomeDist outcome(std::span<const double> x, std::span<const double> mediators, double a,
                      std::size_t k, std::uint64_t seed) const override;
  std::optional<double> propensity(double a, std::span<const double> x) const override;

  std::size_t mediator_count() const noexcept { return pmfs_.size(); }
  FitDiagnostics diagnostics() const;

 private:
  TreatmentKind kind_;
  std::vector<PmfEstimator> pmfs_;
  std::vector<OutcomeSampler> samplers_;  // indexed by conditioned mediator count
  std::optional<PropensityEstimator> propensity_;
  mutable std::atomic<std::size_t> pmf_fallbacks_{0};
  mutable std::atomic<std::size_t> propensity_fallbacks_{0};
  mutable std::atomic<std::size_t> outcome_queries_{0};
};

}  // namespace gmsm
