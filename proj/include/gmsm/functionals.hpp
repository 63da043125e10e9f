#pragma once

#include "gmsm/dist.hpp"
#include "gmsm/model.hpp"
#include "gmsm/shift.hpp"

namespace gmsm {

// Monotone functional of a distribution: its mean or an alpha-quantile.
struct Functional {
  enum class Kind { expectation, quantile };

  Kind kind = Kind::expectation;
  double alpha = 0.5;

  static Functional expectation() { return {}; }
  static Functional quantile(double alpha);
};

double apply_discrete(const Functional& f, const DiscreteDist& pmf);

// Sample estimator of the shifted mean: the first floor(k c) order
// statistics are weighted 1/(s_first k), the rest 1/(s_second k).
// Degenerate bounds return the sample mean.
double expectation_bound_sampled(const SampleDist& sample, const RatioBounds& bounds,
                                 Direction dir);

struct SampledQuantile {
  double value;
  // Set when the weighted empirical CDF never reaches alpha; value is then
  // the largest draw.
  bool capped = false;
};

SampledQuantile quantile_bound_sampled(const SampleDist& sample, const RatioBounds& bounds,
                                       double alpha, Direction dir);

// Shifted functional of a sample, dispatching on the functional kind.
SampledQuantile apply_sampled(const Functional& f, const SampleDist& sample,
                              const RatioBounds& bounds, Direction dir);

}  // namespace gmsm
