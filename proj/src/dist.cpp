#include "gmsm/dist.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace gmsm {

namespace {

constexpr double kMassTolerance = 1e-9;

// Index of the first cumulative mass >= alpha; the last index if rounding
// leaves the total just below alpha.
std::size_t first_reaching(const std::vector<double>& cumulative, double alpha) {
  auto it = std::lower_bound(cumulative.begin(), cumulative.end(), alpha);
  if (it == cumulative.end()) return cumulative.size() - 1;
  return static_cast<std::size_t>(it - cumulative.begin());
}

std::vector<double> running_sum(std::span<const double> probs) {
  std::vector<double> out(probs.size());
  std::partial_sum(probs.begin(), probs.end(), out.begin());
  return out;
}

}  // namespace

void check_quantile_level(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("quantile level must lie in (0, 1), got " +
                                std::to_string(alpha));
  }
}

DiscreteDist::DiscreteDist(std::vector<double> support, std::vector<double> probs,
                           std::vector<std::string> labels)
    : support_(std::move(support)), probs_(std::move(probs)), labels_(std::move(labels)) {
  if (support_.empty()) throw std::invalid_argument("discrete distribution needs support");
  if (support_.size() != probs_.size()) {
    throw std::invalid_argument("support and probabilities differ in length");
  }
  if (!labels_.empty() && labels_.size() != support_.size()) {
    throw std::invalid_argument("labels must match the support length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    if (!std::isfinite(support_[i])) throw std::invalid_argument("support must be finite");
    if (i > 0 && !(support_[i] > support_[i - 1])) {
      throw std::invalid_argument("support must be strictly increasing");
    }
    if (!(probs_[i] >= 0.0)) throw std::invalid_argument("probabilities must be >= 0");
    total += probs_[i];
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw std::invalid_argument("probabilities must sum to 1, got " + std::to_string(total));
  }
}

DiscreteDist DiscreteDist::from_weights(std::vector<double> support,
                                        std::vector<double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("weights must have positive total");
  for (double& w : weights) w /= total;
  return DiscreteDist(std::move(support), std::move(weights));
}

double DiscreteDist::cdf(double w) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < support_.size() && support_[i] <= w; ++i) acc += probs_[i];
  return std::min(acc, 1.0);
}

double DiscreteDist::quantile(double alpha) const {
  check_quantile_level(alpha);
  return support_[first_reaching(running_sum(probs_), alpha)];
}

double DiscreteDist::mean() const {
  double acc = 0.0;
  for (std::size_t i = 0; i < support_.size(); ++i) acc += support_[i] * probs_[i];
  return acc;
}

SampleDist::SampleDist(std::vector<double> sorted_values) : values_(std::move(sorted_values)) {
  if (values_.empty()) throw std::invalid_argument("sample must contain at least one value");
  for (double v : values_) {
    if (std::isnan(v)) throw std::invalid_argument("sample contains NaN");
  }
  if (!std::is_sorted(values_.begin(), values_.end())) {
    throw std::invalid_argument("sample must be sorted ascending");
  }
}

SampleDist SampleDist::from_unsorted(std::vector<double> values) {
  std::stable_sort(values.begin(), values.end());
  return SampleDist(std::move(values));
}

double SampleDist::cdf(double w) const {
  const auto count = std::upper_bound(values_.begin(), values_.end(), w) - values_.begin();
  return static_cast<double>(count) / static_cast<double>(values_.size());
}

double SampleDist::quantile(double alpha) const {
  check_quantile_level(alpha);
  const auto k = values_.size();
  const double kd = static_cast<double>(k);
  // smallest j in [1, k] with j / k >= alpha
  auto j = static_cast<std::size_t>(std::ceil(alpha * kd));
  j = std::clamp<std::size_t>(j, 1, k);
  while (j > 1 && static_cast<double>(j - 1) / kd >= alpha) --j;
  while (j < k && static_cast<double>(j) / kd < alpha) ++j;
  return values_[j - 1];
}

double SampleDist::mean() const {
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values_) {
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return (sum + comp) / static_cast<double>(values_.size());
}

AnalyticDist AnalyticDist::uniform(double lo, double hi) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw std::invalid_argument("uniform distribution needs finite lo < hi");
  }
  return AnalyticDist(Kind::uniform, lo, hi);
}

double AnalyticDist::cdf(double w) const {
  if (kind_ == Kind::standard_normal) return normal_cdf(w);
  return std::clamp((w - lo_) / (hi_ - lo_), 0.0, 1.0);
}

double AnalyticDist::quantile(double alpha) const {
  check_quantile_level(alpha);
  if (kind_ == Kind::standard_normal) return normal_quantile(alpha);
  return lo_ + alpha * (hi_ - lo_);
}

double AnalyticDist::mean() const {
  return kind_ == Kind::standard_normal ? 0.0 : 0.5 * (lo_ + hi_);
}

double cdf(const Distribution& dist, double w) {
  return std::visit([w](const auto& d) { return d.cdf(w); }, dist);
}

double quantile(const Distribution& dist, double alpha) {
  return std::visit([alpha](const auto& d) { return d.quantile(alpha); }, dist);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_pdf(double z) {
  constexpr double inv_sqrt_2pi = 0.398942280401432677939946059934;
  return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

double normal_quantile(double p) {
  check_quantile_level(p);
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

}  // namespace gmsm
