#pragma once

#include <functional>
#include <span>
#include <vector>

#include "gmsm/dist.hpp"
#include "gmsm/model.hpp"

namespace gmsm {

// upper moves mass right (sup of a monotone functional), lower moves it left.
enum class Direction { upper, lower };

// Quantile threshold and the two reweighting factors for one direction:
// mass below `c` is scaled by 1/s_first, mass above by 1/s_second.
struct ShiftParams {
  double c;
  double s_first;
  double s_second;
};

ShiftParams shift_params(const RatioBounds& bounds, Direction dir);

// Shifted masses for a pmf listed in the order the shift should treat as
// ascending. Throws if the masses are negative or do not sum to 1 within
// 1e-9. Returns a copy when the bounds are degenerate.
std::vector<double> shift_masses(std::span<const double> probs, const RatioBounds& bounds,
                                 Direction dir);

DiscreteDist shift_discrete(const DiscreteDist& pmf, const RatioBounds& bounds, Direction dir);

// Maps a base CDF level F(w) to the shifted level F+(w) or F-(w).
double shift_cdf_value(double base_level, const RatioBounds& bounds, Direction dir);

// Inverse of shift_cdf_value: the base level whose shifted level is `level`.
double unshift_cdf_level(double level, const RatioBounds& bounds, Direction dir);

double shift_cdf(const std::function<double(double)>& base_cdf, const RatioBounds& bounds,
                 Direction dir, double w);

class ShiftedCdf {
 public:
  ShiftedCdf(Distribution base, RatioBounds bounds, Direction dir)
      : base_(std::move(base)), bounds_(bounds), dir_(dir) {}

  double operator()(double w) const { return shift_cdf_value(cdf(base_, w), bounds_, dir_); }

  // Generalized inverse of the shifted CDF, computed through the base.
  double quantile(double alpha) const;

  const Distribution& base() const noexcept { return base_; }
  const RatioBounds& bounds() const noexcept { return bounds_; }
  Direction direction() const noexcept { return dir_; }

 private:
  Distribution base_;
  RatioBounds bounds_;
  Direction dir_;
};

}  // namespace gmsm
