#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gmsm/dist.hpp"
#include "gmsm/functionals.hpp"
#include "gmsm/model.hpp"
#include "gmsm/shift.hpp"

namespace gmsm {

// Q(x, a_1..a_{l+1}): mediator M_i is intervened on with a_i and the
// outcome with a_{l+1}.
struct CausalQuery {
  std::vector<double> x;
  std::vector<double> treatments;
  Functional functional;
  std::vector<std::string> mediators;
  std::string outcome = "Y";

  std::size_t length() const noexcept { return mediators.size(); }
  void validate() const;
};

using OutcomeDist = std::variant<SampleDist, DiscreteDist>;

// Estimated observational conditionals consumed by the bounds.
class ConditionalModel {
 public:
  virtual ~ConditionalModel() = default;

  virtual TreatmentKind treatment_kind() const = 0;

  // P(M_i | x, m_1..m_{i-1}, a), i counted from 1.
  virtual DiscreteDist mediator_pmf(std::size_t i, std::span<const double> x,
                                    std::span<const double> prior, double a) const = 0;

  // k draws (or an exact pmf) of Y | x, m_1..m_l, a; l is prior.size().
  // Must be a pure function of its arguments.
  virtual OutcomeDist outcome(std::span<const double> x, std::span<const double> mediators,
                              double a, std::size_t k, std::uint64_t seed) const = 0;

  // P(a | x) for discrete treatments; empty when unavailable.
  virtual std::optional<double> propensity(double a, std::span<const double> x) const = 0;
};

// ConditionalModel assembled from callables; convenient for tests and
// bindings.
class CallbackModel final : public ConditionalModel {
 public:
  using MediatorFn = std::function<DiscreteDist(std::size_t, std::span<const double>,
                                                std::span<const double>, double)>;
  using OutcomeFn = std::function<OutcomeDist(std::span<const double>, std::span<const double>,
                                              double, std::size_t, std::uint64_t)>;
  using PropensityFn = std::function<std::optional<double>(double, std::span<const double>)>;

  CallbackModel(TreatmentKind kind, OutcomeFn outcome, MediatorFn mediator = {},
                PropensityFn propensity = {})
      : kind_(kind),
        outcome_(std::move(outcome)),
        mediator_(std::move(mediator)),
        propensity_(std::move(propensity)) {}

  TreatmentKind treatment_kind() const override { return kind_; }
  DiscreteDist mediator_pmf(std::size_t i, std::span<const double> x,
                            std::span<const double> prior, double a) const override;
  OutcomeDist outcome(std::span<const double> x, std::span<const double> mediators, double a,
                      std::size_t k, std::uint64_t seed) const override;
  std::optional<double> propensity(double a, std::span<const double> x) const override;

 private:
  TreatmentKind kind_;
  OutcomeFn outcome_;
  MediatorFn mediator_;
  PropensityFn propensity_;
};

struct BoundOptions {
  std::size_t k = 10000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct NodeReport {
  std::string node;
  double a;
  RatioBounds bounds;
  std::optional<double> propensity;
  bool sharp;
};

struct BoundsResult {
  double lower;
  double upper;
  std::vector<NodeReport> nodes;
  std::size_t k;
  std::size_t outcome_cells;
  // A sampled quantile bound hit the largest draw without reaching alpha.
  bool quantile_capped = false;
};

struct EffectInterval {
  double lower;
  double upper;
};

// Seed of the outcome sample for one (x, mediators, a) cell. Shared by both
// directions and by every query touching the cell.
std::uint64_t outcome_cell_seed(std::uint64_t root, std::span<const double> x,
                                std::span<const double> mediators, double a);

// Both directions of one query; dispatches on the mediator chain length.
BoundsResult compute_bounds(const ConditionalModel& model, const CausalQuery& query,
                            const SensitivitySpec& spec, const BoundOptions& opts = {});

double bound_no_mediators(const ConditionalModel& model, const CausalQuery& query,
                          const SensitivitySpec& spec, Direction dir,
                          const BoundOptions& opts = {});

double bound_with_mediators(const ConditionalModel& model, const CausalQuery& query,
                            const SensitivitySpec& spec, Direction dir,
                            const BoundOptions& opts = {});

// One backward step of the mediator recursion: sorts the support by
// downstream value (ties by support order), shifts the permuted pmf and
// returns the shifted average of the downstream values.
double mediator_step(std::span<const double> probs, std::span<const double> downstream,
                     const RatioBounds& bounds, Direction dir);

// Mean of the conditional bounds over a covariate sample; query.x is
// ignored.
EffectInterval bound_average(const ConditionalModel& model, const CausalQuery& query,
                             const SensitivitySpec& spec,
                             const std::vector<std::vector<double>>& x_sample,
                             const BoundOptions& opts = {});

// Bounds on Q(a1) - Q(a2) for queries sharing x and the functional.
EffectInterval bound_difference(const ConditionalModel& model, const CausalQuery& first,
                                const CausalQuery& second, const SensitivitySpec& spec,
                                const BoundOptions& opts = {});

}  // namespace gmsm
