#pragma once

#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace gmsm {

enum class TreatmentKind { discrete, continuous };

// Widths s+ - s- below this are treated as the unconfounded case: the
// quantile formula is 0/0 there and every shift collapses to the identity.
inline constexpr double kDegenerateWidth = 1e-12;

// Half-open interval (lo, hi]. The defaults cover the whole real line.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double v) const noexcept { return v > lo && v <= hi; }
};

// Axis-aligned cell in (a, x) space. Covariate dimensions beyond the
// listed intervals are unconstrained.
struct Region {
  std::vector<Interval> x;
  Interval a;

  bool contains(double a_value, std::span<const double> x_value) const;
};

// Piecewise-constant lookup over (a, x); the first matching cell wins.
template <class Value>
struct RegionTable {
  std::vector<std::pair<Region, Value>> cells;
  Value fallback{};

  const Value& lookup(double a, std::span<const double> x) const {
    for (const auto& [region, value] : cells) {
      if (region.contains(a, x)) return value;
    }
    return fallback;
  }
};

// Weight function q(a, x) of a weighted sensitivity model. Always
// evaluates into [0, 1].
class WeightFn {
 public:
  enum class Kind { constant_zero, propensity, indicator_table, constant };

  WeightFn() = default;

  static WeightFn zero() { return WeightFn(Kind::constant_zero, 0.0, {}); }
  static WeightFn propensity() { return WeightFn(Kind::propensity, 0.0, {}); }
  static WeightFn constant(double c);
  static WeightFn table(RegionTable<double> table);

  Kind kind() const noexcept { return kind_; }
  double constant_value() const noexcept { return constant_; }
  const RegionTable<double>& table_value() const noexcept { return table_; }

  // `propensity` must be present for Kind::propensity.
  double evaluate(double a, std::span<const double> x,
                  std::optional<double> propensity) const;

 private:
  WeightFn(Kind kind, double constant, RegionTable<double> table)
      : kind_(kind), constant_(constant), table_(std::move(table)) {}

  Kind kind_ = Kind::constant_zero;
  double constant_ = 0.0;
  RegionTable<double> table_;
};

struct WeightedEntry {
  double gamma = 1.0;
  WeightFn weight;
};

struct RatioPair {
  double s_minus = 1.0;
  double s_plus = 1.0;
};

// Explicit density-ratio bounds, optionally varying over (a, x) cells.
struct ExplicitEntry {
  RegionTable<RatioPair> bounds;
};

using SensitivityEntry = std::variant<WeightedEntry, ExplicitEntry>;

// Per-node confounding restriction. Node labels are free-form strings;
// the library uses "M1".."Ml" for mediators and "Y" for the outcome.
class SensitivitySpec {
 public:
  void set(std::string node, SensitivityEntry entry);
  void set_weighted(std::string node, double gamma, WeightFn weight);
  void set_explicit(std::string node, double s_minus, double s_plus);

  bool contains(std::string_view node) const;
  const SensitivityEntry& at(std::string_view node) const;
  const std::map<std::string, SensitivityEntry, std::less<>>& entries() const noexcept {
    return entries_;
  }

  // Copy with the gamma of a weighted node replaced.
  SensitivitySpec with_gamma(std::string_view node, double gamma) const;

 private:
  std::map<std::string, SensitivityEntry, std::less<>> entries_;
};

// Density-ratio bounds and shift quantiles for one (node, a, x).
struct RatioBounds {
  double s_minus = 1.0;
  double s_plus = 1.0;
  double c_plus = std::numeric_limits<double>::quiet_NaN();
  double c_minus = std::numeric_limits<double>::quiet_NaN();

  // True when the bounds leave no room for confounding; c_plus and
  // c_minus are NaN in that case.
  bool identity() const noexcept { return !(s_plus - s_minus >= kDegenerateWidth); }

  // General GMSM: c+ = (1 - s-) s+ / (s+ - s-), c- by swapping signs.
  static RatioBounds from_ratios(double s_minus, double s_plus);

  // Weighted GMSM with sensitivity parameter gamma and weight q. The
  // quantiles take the closed form gamma / (1 + gamma) and 1 / (1 + gamma).
  static RatioBounds from_weighted(double gamma, double q);
};

RatioBounds ratio_bounds(const SensitivitySpec& spec, std::string_view node, double a,
                         std::span<const double> x, std::optional<double> propensity);

// Convenience overload for weights that do not depend on (a, x).
RatioBounds ratio_bounds(const SensitivitySpec& spec, std::string_view node,
                         std::optional<double> propensity = std::nullopt);

// Sharpness diagnostic: continuous treatments are always sharp; discrete
// ones need 1/s+ >= P(a | x).
bool is_sharp(const RatioBounds& bounds, double propensity, TreatmentKind kind);

}  // namespace gmsm
