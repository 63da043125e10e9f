#include "gmsm/shift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gmsm {

ShiftParams shift_params(const RatioBounds& bounds, Direction dir) {
  if (dir == Direction::upper) return {bounds.c_plus, bounds.s_plus, bounds.s_minus};
  return {bounds.c_minus, bounds.s_minus, bounds.s_plus};
}

std::vector<double> shift_masses(std::span<const double> probs, const RatioBounds& bounds,
                                 Direction dir) {
  if (probs.empty()) throw std::invalid_argument("cannot shift an empty pmf");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw std::invalid_argument("pmf masses must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("pmf must sum to 1 before shifting, got " +
                                std::to_string(total));
  }
  std::vector<double> out(probs.begin(), probs.end());
  if (bounds.identity()) return out;

  const auto [c, s_first, s_second] = shift_params(bounds, dir);
  double prev = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double p = probs[i] / total;
    // the last point closes the CDF exactly so rounding cannot strand mass
    const double here = i + 1 == out.size() ? 1.0 : prev + p;
    if (here < c) {
      out[i] = p / s_first;
    } else if (prev > c) {
      out[i] = p / s_second;
    } else {
      const double straddle = (c - prev) / s_first + (here - c) / s_second;
      const double a = p / s_first;
      const double b = p / s_second;
      out[i] = std::clamp(straddle, std::min(a, b), std::max(a, b));
    }
    prev = here;
  }
  return out;
}

DiscreteDist shift_discrete(const DiscreteDist& pmf, const RatioBounds& bounds, Direction dir) {
  auto support = pmf.support();
  return DiscreteDist({support.begin(), support.end()}, shift_masses(pmf.probs(), bounds, dir),
                      pmf.labels());
}

double shift_cdf_value(double base_level, const RatioBounds& bounds, Direction dir) {
  const double f = std::clamp(base_level, 0.0, 1.0);
  if (bounds.identity()) return f;
  const auto [c, s_first, s_second] = shift_params(bounds, dir);
  const double shifted = f <= c ? f / s_first : c / s_first + (f - c) / s_second;
  return std::clamp(shifted, 0.0, 1.0);
}

double unshift_cdf_level(double level, const RatioBounds& bounds, Direction dir) {
  const double g = std::clamp(level, 0.0, 1.0);
  if (bounds.identity()) return g;
  const auto [c, s_first, s_second] = shift_params(bounds, dir);
  const double knee = c / s_first;
  const double base = g <= knee ? g * s_first : c + (g - knee) * s_second;
  return std::clamp(base, 0.0, 1.0);
}

double shift_cdf(const std::function<double(double)>& base_cdf, const RatioBounds& bounds,
                 Direction dir, double w) {
  return shift_cdf_value(base_cdf(w), bounds, dir);
}

double ShiftedCdf::quantile(double alpha) const {
  check_quantile_level(alpha);
  if (const auto* d = std::get_if<DiscreteDist>(&base_)) {
    return shift_discrete(*d, bounds_, dir_).quantile(alpha);
  }
  // The shift map is continuous and strictly increasing, so the shifted
  // generalized inverse is the base inverse at the pulled-back level.
  const double level = unshift_cdf_level(alpha, bounds_, dir_);
  const double eps = std::numeric_limits<double>::epsilon();
  return gmsm::quantile(base_, std::clamp(level, eps, 1.0 - eps));
}

}  // namespace gmsm
