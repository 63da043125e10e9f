#include "gmsm/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gmsm {

namespace {

// Neumaier-compensated sum of values[begin, end).
double compensated_sum(std::span<const double> values, std::size_t begin, std::size_t end) {
  double sum = 0.0;
  double comp = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    const double v = values[i];
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return sum + comp;
}

std::size_t split_index(std::size_t k, double c) {
  const double raw = std::floor(static_cast<double>(k) * c);
  return static_cast<std::size_t>(std::clamp(raw, 0.0, static_cast<double>(k)));
}

}  // namespace

Functional Functional::quantile(double alpha) {
  check_quantile_level(alpha);
  return {Kind::quantile, alpha};
}

double apply_discrete(const Functional& f, const DiscreteDist& pmf) {
  if (f.kind == Functional::Kind::expectation) return pmf.mean();
  return pmf.quantile(f.alpha);
}

double expectation_bound_sampled(const SampleDist& sample, const RatioBounds& bounds,
                                 Direction dir) {
  const auto values = sample.values();
  const std::size_t k = values.size();
  if (k == 0) throw std::invalid_argument("expectation bound needs a nonempty sample");
  if (bounds.identity()) return sample.mean();
  const auto [c, s_first, s_second] = shift_params(bounds, dir);
  const std::size_t split = split_index(k, c);
  const double kd = static_cast<double>(k);
  return compensated_sum(values, 0, split) / (s_first * kd) +
         compensated_sum(values, split, k) / (s_second * kd);
}

SampledQuantile quantile_bound_sampled(const SampleDist& sample, const RatioBounds& bounds,
                                       double alpha, Direction dir) {
  check_quantile_level(alpha);
  const auto values = sample.values();
  const std::size_t k = values.size();
  if (k == 0) throw std::invalid_argument("quantile bound needs a nonempty sample");
  if (bounds.identity()) return {sample.quantile(alpha), false};

  const auto [c, s_first, s_second] = shift_params(bounds, dir);
  const std::size_t split = split_index(k, c);
  const double kd = static_cast<double>(k);
  std::size_t i = 0;
  while (i < k) {
    // evaluate the weighted CDF after the whole run of ties at values[i]
    std::size_t j = i + 1;
    while (j < k && values[j] == values[i]) ++j;
    const double below = static_cast<double>(std::min(j, split));
    const double above = static_cast<double>(j > split ? j - split : 0);
    const double level = (below / s_first + above / s_second) / kd;
    if (level >= alpha) return {values[i], false};
    i = j;
  }
  return {values[k - 1], true};
}

SampledQuantile apply_sampled(const Functional& f, const SampleDist& sample,
                              const RatioBounds& bounds, Direction dir) {
  if (f.kind == Functional::Kind::expectation) {
    return {expectation_bound_sampled(sample, bounds, dir), false};
  }
  return quantile_bound_sampled(sample, bounds, f.alpha, dir);
}

}  // namespace gmsm
