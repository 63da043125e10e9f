#include "gmsm/model.hpp"

#include <cmath>
#include <stdexcept>

namespace gmsm {

namespace {

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " must lie in [0, 1], got " +
                                std::to_string(v));
  }
}

void check_gamma(double gamma) {
  if (!(gamma >= 1.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("sensitivity parameter gamma must be finite and >= 1, got " +
                                std::to_string(gamma));
  }
}

void check_ratio_pair(const RatioPair& pair) {
  if (!(pair.s_minus > 0.0 && pair.s_minus <= 1.0)) {
    throw std::invalid_argument("s_minus must lie in (0, 1], got " +
                                std::to_string(pair.s_minus));
  }
  if (!(pair.s_plus >= 1.0) || !std::isfinite(pair.s_plus)) {
    throw std::invalid_argument("s_plus must be finite and >= 1, got " +
                                std::to_string(pair.s_plus));
  }
}

}  // namespace

bool Region::contains(double a_value, std::span<const double> x_value) const {
  if (!a.contains(a_value)) return false;
  if (x.size() > x_value.size()) return false;
  for (std::size_t d = 0; d < x.size(); ++d) {
    if (!x[d].contains(x_value[d])) return false;
  }
  return true;
}

WeightFn WeightFn::constant(double c) {
  check_unit(c, "constant weight");
  return WeightFn(Kind::constant, c, {});
}

WeightFn WeightFn::table(RegionTable<double> table) {
  check_unit(table.fallback, "weight table fallback");
  for (const auto& cell : table.cells) check_unit(cell.second, "weight table value");
  return WeightFn(Kind::indicator_table, 0.0, std::move(table));
}

double WeightFn::evaluate(double a, std::span<const double> x,
                          std::optional<double> propensity) const {
  switch (kind_) {
    case Kind::constant_zero:
      return 0.0;
    case Kind::constant:
      return constant_;
    case Kind::indicator_table:
      return table_.lookup(a, x);
    case Kind::propensity:
      if (!propensity) {
        throw std::invalid_argument("propensity weight requires P(a | x)");
      }
      check_unit(*propensity, "propensity");
      return *propensity;
  }
  return 0.0;
}

void SensitivitySpec::set(std::string node, SensitivityEntry entry) {
  if (const auto* w = std::get_if<WeightedEntry>(&entry)) {
    check_gamma(w->gamma);
  } else {
    const auto& table = std::get<ExplicitEntry>(entry).bounds;
    check_ratio_pair(table.fallback);
    for (const auto& cell : table.cells) check_ratio_pair(cell.second);
  }
  entries_.insert_or_assign(std::move(node), std::move(entry));
}

void SensitivitySpec::set_weighted(std::string node, double gamma, WeightFn weight) {
  set(std::move(node), WeightedEntry{gamma, std::move(weight)});
}

void SensitivitySpec::set_explicit(std::string node, double s_minus, double s_plus) {
  ExplicitEntry entry;
  entry.bounds.fallback = RatioPair{s_minus, s_plus};
  set(std::move(node), std::move(entry));
}

bool SensitivitySpec::contains(std::string_view node) const {
  return entries_.find(node) != entries_.end();
}

const SensitivityEntry& SensitivitySpec::at(std::string_view node) const {
  auto it = entries_.find(node);
  if (it == entries_.end()) {
    throw std::invalid_argument("sensitivity spec has no entry for node '" +
                                std::string(node) + "'");
  }
  return it->second;
}

SensitivitySpec SensitivitySpec::with_gamma(std::string_view node, double gamma) const {
  auto* weighted = std::get_if<WeightedEntry>(&at(node));
  if (weighted == nullptr) {
    throw std::invalid_argument("node '" + std::string(node) +
                                "' is not a weighted entry; cannot vary gamma");
  }
  SensitivitySpec copy = *this;
  copy.set_weighted(std::string(node), gamma, weighted->weight);
  return copy;
}

RatioBounds RatioBounds::from_ratios(double s_minus, double s_plus) {
  check_ratio_pair(RatioPair{s_minus, s_plus});
  RatioBounds out;
  out.s_minus = s_minus;
  out.s_plus = s_plus;
  if (out.identity()) return out;
  const double width = s_plus - s_minus;
  out.c_plus = (1.0 - s_minus) * s_plus / width;
  out.c_minus = (s_plus - 1.0) * s_minus / width;
  return out;
}

RatioBounds RatioBounds::from_weighted(double gamma, double q) {
  check_gamma(gamma);
  check_unit(q, "weight q(a, x)");
  RatioBounds out;
  out.s_minus = 1.0 / ((1.0 - gamma) * q + gamma);
  out.s_plus = 1.0 / ((1.0 - 1.0 / gamma) * q + 1.0 / gamma);
  if (out.identity()) return out;
  out.c_plus = gamma / (1.0 + gamma);
  out.c_minus = 1.0 / (1.0 + gamma);
  return out;
}

RatioBounds ratio_bounds(const SensitivitySpec& spec, std::string_view node, double a,
                         std::span<const double> x, std::optional<double> propensity) {
  if (propensity) check_unit(*propensity, "propensity");
  const SensitivityEntry& entry = spec.at(node);
  if (const auto* w = std::get_if<WeightedEntry>(&entry)) {
    return RatioBounds::from_weighted(w->gamma, w->weight.evaluate(a, x, propensity));
  }
  const RatioPair& pair = std::get<ExplicitEntry>(entry).bounds.lookup(a, x);
  return RatioBounds::from_ratios(pair.s_minus, pair.s_plus);
}

RatioBounds ratio_bounds(const SensitivitySpec& spec, std::string_view node,
                         std::optional<double> propensity) {
  return ratio_bounds(spec, node, 0.0, {}, propensity);
}

bool is_sharp(const RatioBounds& bounds, double propensity, TreatmentKind kind) {
  if (kind == TreatmentKind::continuous) return true;
  return 1.0 / bounds.s_plus >= propensity;
}

}  // namespace gmsm
