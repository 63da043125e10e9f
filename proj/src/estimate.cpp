#include "gmsm/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "gmsm/error.hpp"
#include "gmsm/random.hpp"

namespace gmsm {

namespace {

std::vector<double> unique_sorted(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool contains_value(const std::vector<double>& sorted, double v) {
  return std::binary_search(sorted.begin(), sorted.end(), v);
}

std::size_t index_of(const std::vector<double>& sorted, double v) {
  return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), v) -
                                  sorted.begin());
}

double std_dev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1.0));
}

double sorted_quantile(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// 0.9 min(sd, IQR / 1.34) n^(-1/5); falls back to sd when the IQR is zero.
// Least-squares slope of y on feature offsets with a free intercept.
// Empty when the neighbourhood is too small or the design is singular.
std::optional<std::vector<double>> local_slope(const std::vector<std::vector<double>>& z,
                                               std::span<const double> y) {
  const std::size_t p = z.empty() ? 0 : z.front().size();
  const std::size_t n = y.size();
  if (p == 0 || n < 10 * (p + 1)) return std::nullopt;
  const std::size_t dim = p + 1;
  // normal equations on [1, z]; the last column holds X'y
  std::vector<std::vector<double>> m(dim, std::vector<double>(dim + 1, 0.0));
  std::vector<double> row(dim);
  for (std::size_t i = 0; i < n; ++i) {
    row[0] = 1.0;
    for (std::size_t d = 0; d < p; ++d) row[d + 1] = z[i][d];
    for (std::size_t r = 0; r < dim; ++r) {
      for (std::size_t c = 0; c < dim; ++c) m[r][c] += row[r] * row[c];
      m[r][dim] += row[r] * y[i];
    }
  }
  for (std::size_t col = 0; col < dim; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < dim; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    if (!(std::abs(m[pivot][col]) > 1e-12 * static_cast<double>(n))) return std::nullopt;
    std::swap(m[col], m[pivot]);
    for (std::size_t r = 0; r < dim; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (std::size_t c = col; c <= dim; ++c) m[r][c] -= f * m[col][c];
    }
  }
  std::vector<double> slope(p);
  for (std::size_t d = 0; d < p; ++d) slope[d] = m[d + 1][dim] / m[d + 1][d + 1];
  return slope;
}

double silverman(std::vector<double> v) {
  if (v.size() < 2) return 0.0;
  const double sd = std_dev(v);
  std::sort(v.begin(), v.end());
  const double iqr = (sorted_quantile(v, 0.75) - sorted_quantile(v, 0.25)) / 1.34;
  const double spread = iqr > 0.0 ? std::min(sd, iqr) : sd;
  return 0.9 * spread * std::pow(static_cast<double>(v.size()), -0.2);
}

std::string render(std::span<const double> v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(v[i]);
  }
  return s + ")";
}

}  // namespace

void FitConfig::validate() const {
  if (x_bins < 1) throw std::invalid_argument("x_bins must be >= 1");
  if (min_cell_count < 1) throw std::invalid_argument("min_cell_count must be >= 1");
  if (!(a_bandwidth >= 0.0)) throw std::invalid_argument("a_bandwidth must be >= 0");
}

void ObservedData::validate() const {
  const std::size_t n = a.size();
  if (n == 0) throw DataError("dataset is empty");
  if (x.empty()) throw DataError("dataset needs at least one covariate column");
  auto check = [n](const std::vector<double>& col, const std::string& name) {
    if (col.size() != n) throw DataError("column " + name + " has a different length");
    for (double v : col) {
      if (!std::isfinite(v)) throw DataError("column " + name + " has a non-finite value");
    }
  };
  for (std::size_t d = 0; d < x.size(); ++d) check(x[d], "x" + std::to_string(d + 1));
  check(a, "a");
  for (std::size_t i = 0; i < mediators.size(); ++i) check(mediators[i], "m" + std::to_string(i + 1));
  check(y, "y");
}

std::vector<double> ObservedData::row_x(std::size_t i) const {
  std::vector<double> out(x.size());
  for (std::size_t d = 0; d < x.size(); ++d) out[d] = x[d][i];
  return out;
}

ObservedData ObservedData::subset(std::span<const std::size_t> rows) const {
  ObservedData out;
  out.treatment = treatment;
  const auto pick = [&](const std::vector<double>& col) {
    std::vector<double> v(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) v[i] = col[rows[i]];
    return v;
  };
  for (const auto& col : x) out.x.push_back(pick(col));
  out.a = pick(a);
  for (const auto& col : mediators) out.mediators.push_back(pick(col));
  out.y = pick(y);
  return out;
}

ObservedData ObservedData::from_dataset(const Dataset& d, TreatmentKind kind,
                                        std::size_t mediator_count) {
  if (mediator_count > 2) throw std::invalid_argument("the dataset has two mediators");
  ObservedData out;
  out.treatment = kind;
  out.x = {d.x};
  out.a = d.a;
  if (mediator_count >= 1) out.mediators.push_back(d.m1);
  if (mediator_count >= 2) out.mediators.push_back(d.m2);
  out.y = d.y;
  return out;
}

XBinner::XBinner(const ObservedData& data, int bins) : bins_(bins) {
  cells_ = 1;
  for (const auto& col : data.x) {
    const auto [mn, mx] = std::minmax_element(col.begin(), col.end());
    lo_.push_back(*mn);
    const double w = (*mx - *mn) / bins;
    width_.push_back(w > 0.0 ? w : 1.0);
    cells_ *= static_cast<std::size_t>(bins);
  }
}

std::size_t XBinner::cell(std::span<const double> x) const {
  if (x.size() != lo_.size()) {
    throw std::invalid_argument("covariate vector has " + std::to_string(x.size()) +
                                " dimensions, model was fit with " +
                                std::to_string(lo_.size()));
  }
  std::size_t idx = 0;
  std::size_t stride = 1;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double raw = std::floor((x[d] - lo_[d]) / width_[d]);
    const auto b = static_cast<std::size_t>(std::clamp(raw, 0.0, static_cast<double>(bins_ - 1)));
    idx += b * stride;
    stride *= static_cast<std::size_t>(bins_);
  }
  return idx;
}

PmfEstimator::PmfEstimator(const ObservedData& data, std::size_t mediator, const FitConfig& cfg)
    : mediator_(mediator), kind_(data.treatment), cfg_(cfg), binner_(data, cfg.x_bins) {
  cfg.validate();
  if (mediator >= data.mediators.size()) throw std::invalid_argument("no such mediator column");
  const auto& target = data.mediators[mediator];
  support_ = unique_sorted(target);
  for (std::size_t j = 0; j < mediator; ++j) prior_support_.push_back(unique_sorted(data.mediators[j]));
  marginal_counts_.assign(support_.size(), 0.0);

  if (kind_ == TreatmentKind::discrete) {
    a_support_ = unique_sorted(data.a);
  } else {
    a_bandwidth_ = cfg.a_bandwidth > 0.0 ? cfg.a_bandwidth : silverman(data.a);
    if (!(a_bandwidth_ > 0.0)) throw DataError("continuous treatment column is constant");
  }
  std::vector<double> prior(mediator);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < mediator; ++j) prior[j] = data.mediators[j][i];
    const std::size_t v = index_of(support_, target[i]);
    marginal_counts_[v] += 1.0;
    const auto x = data.row_x(i);
    if (kind_ == TreatmentKind::discrete) {
      auto& c = counts_[key(x, prior, data.a[i])];
      if (c.empty()) c.assign(support_.size(), 0.0);
      c[v] += 1.0;
    } else {
      rows_[key(x, prior, std::nullopt)].emplace_back(data.a[i], v);
    }
  }
}

PmfEstimator::Key PmfEstimator::key(std::span<const double> x, std::span<const double> prior,
                                    std::optional<double> a) const {
  Key k;
  k.reserve(prior.size() + 2);
  k.push_back(static_cast<double>(binner_.cell(x)));
  k.insert(k.end(), prior.begin(), prior.end());
  if (a) k.push_back(*a);
  return k;
}

void PmfEstimator::check_prior(std::span<const double> prior) const {
  if (prior.size() != mediator_) {
    throw std::invalid_argument("mediator " + std::to_string(mediator_ + 1) + " conditions on " +
                                std::to_string(mediator_) + " earlier mediators, got " +
                                std::to_string(prior.size()));
  }
  for (std::size_t j = 0; j < prior.size(); ++j) {
    if (!contains_value(prior_support_[j], prior[j])) {
      throw DataError("unseen value " + std::to_string(prior[j]) + " for mediator " +
                      std::to_string(j + 1));
    }
  }
}

DiscreteDist PmfEstimator::smoothed(std::span<const double> weights) const {
  std::vector<double> w(weights.begin(), weights.end());
  for (double& v : w) v += 1.0;
  return DiscreteDist::from_weights(support_, std::move(w));
}

PmfEstimate PmfEstimator::operator()(std::span<const double> x, std::span<const double> prior,
                                     double a) const {
  check_prior(prior);
  const auto min_count = static_cast<double>(cfg_.min_cell_count);
  if (kind_ == TreatmentKind::discrete) {
    if (!contains_value(a_support_, a)) {
      throw DataError("unseen treatment value " + std::to_string(a));
    }
    auto it = counts_.find(key(x, prior, a));
    if (it != counts_.end() &&
        std::accumulate(it->second.begin(), it->second.end(), 0.0) >= min_count) {
      return {smoothed(it->second), false};
    }
    return {smoothed(marginal_counts_), true};
  }
  auto it = rows_.find(key(x, prior, std::nullopt));
  if (it != rows_.end()) {
    std::vector<double> w(support_.size(), 0.0);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (const auto& [a_i, v] : it->second) {
      const double k = normal_pdf((a - a_i) / a_bandwidth_);
      w[v] += k;
      sum += k;
      sum_sq += k * k;
    }
    if (sum_sq > 0.0 && sum * sum / sum_sq >= min_count) {
      // rescale kernel weights to effective counts before smoothing
      const double scale = sum / sum_sq;
      for (double& v : w) v *= scale;
      return {smoothed(w), false};
    }
  }
  return {smoothed(marginal_counts_), true};
}

OutcomeSampler::OutcomeSampler(const ObservedData& data, std::size_t mediators,
                               const FitConfig& cfg)
    : mediators_(mediators), kind_(data.treatment), knn_k_(cfg.knn_k),
      local_linear_(cfg.local_linear), y_(data.y) {
  cfg.validate();
  if (mediators > data.mediators.size()) throw std::invalid_argument("no such mediator column");
  const bool continuous = kind_ == TreatmentKind::continuous;
  for (const auto& col : data.x) {
    const double sd = std_dev(col);
    scale_.push_back(sd > 0.0 ? 1.0 / sd : 1.0);
  }
  if (continuous) {
    const double sd = std_dev(data.a);
    scale_.push_back(sd > 0.0 ? 1.0 / sd : 1.0);
  }
  const std::size_t dims = scale_.size();
  features_.assign(data.size(), std::vector<double>(dims));
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t d = 0; d < data.x.size(); ++d) features_[i][d] = data.x[d][i] * scale_[d];
    if (continuous) features_[i][dims - 1] = data.a[i] * scale_[dims - 1];
    std::vector<double> key;
    for (std::size_t j = 0; j < mediators; ++j) key.push_back(data.mediators[j][i]);
    if (!continuous) key.push_back(data.a[i]);
    strata_[key].push_back(i);
  }
}

std::pair<std::vector<double>, double> OutcomeSampler::neighbourhood(std::span<const double> x,
                                                                     std::span<const double> m,
                                                                     double a) const {
  const bool continuous = kind_ == TreatmentKind::continuous;
  if (m.size() != mediators_) throw std::invalid_argument("wrong number of mediator values");
  if (x.size() + (continuous ? 1 : 0) != scale_.size()) {
    throw std::invalid_argument("covariate vector has the wrong dimension");
  }
  std::vector<double> key(m.begin(), m.end());
  if (!continuous) key.push_back(a);
  auto it = strata_.find(key);
  if (it == strata_.end()) {
    throw DataError("no observations in outcome stratum mediators=" + render(m) +
                    (continuous ? "" : ", a=" + std::to_string(a)));
  }
  std::vector<double> q(scale_.size());
  for (std::size_t d = 0; d < x.size(); ++d) q[d] = x[d] * scale_[d];
  if (continuous) q.back() = a * scale_.back();

  const auto& rows = it->second;
  std::vector<std::pair<double, std::size_t>> dist(rows.size());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const auto& f = features_[rows[j]];
    double d2 = 0.0;
    for (std::size_t d = 0; d < q.size(); ++d) d2 += (f[d] - q[d]) * (f[d] - q[d]);
    dist[j] = {d2, rows[j]};
  }
  const std::size_t wanted =
      knn_k_ > 0 ? knn_k_
                 : static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(dist.size()), 0.8)));
  const std::size_t kn = std::min(wanted, dist.size());
  std::nth_element(dist.begin(), dist.begin() + static_cast<long>(kn - 1), dist.end());
  std::sort(dist.begin(), dist.begin() + static_cast<long>(kn));
  std::vector<double> ys(kn);
  for (std::size_t j = 0; j < kn; ++j) ys[j] = y_[dist[j].second];
  if (local_linear_) {
    std::vector<std::vector<double>> offsets(kn, std::vector<double>(q.size()));
    for (std::size_t j = 0; j < kn; ++j) {
      const auto& f = features_[dist[j].second];
      for (std::size_t d = 0; d < q.size(); ++d) offsets[j][d] = f[d] - q[d];
    }
    if (const auto slope = local_slope(offsets, ys)) {
      for (std::size_t j = 0; j < kn; ++j) {
        for (std::size_t d = 0; d < q.size(); ++d) ys[j] -= (*slope)[d] * offsets[j][d];
      }
    }
  }
  const double h = silverman(ys);
  return {std::move(ys), h};
}

SampleDist OutcomeSampler::operator()(std::span<const double> x, std::span<const double> m,
                                      double a, std::size_t k, std::uint64_t seed) const {
  if (k == 0) throw std::invalid_argument("outcome sample size must be >= 1");
  const auto [ys, h] = neighbourhood(x, m, a);
  Engine eng = make_engine(seed);
  boost::random::uniform_int_distribution<std::size_t> pick(0, ys.size() - 1);
  boost::random::normal_distribution<double> jitter;
  std::vector<double> out(k);
  for (double& v : out) {
    const double base = ys[pick(eng)];
    v = base + h * jitter(eng);
  }
  return SampleDist::from_unsorted(std::move(out));
}

PropensityEstimator::PropensityEstimator(const ObservedData& data, const FitConfig& cfg)
    : binner_(data, cfg.x_bins) {
  cfg.validate();
  if (data.treatment != TreatmentKind::discrete) {
    throw std::invalid_argument("propensity estimation needs a discrete treatment");
  }
  a_support_ = unique_sorted(data.a);
  counts_.assign(binner_.cells(), std::vector<double>(a_support_.size(), 0.0));
  totals_.assign(binner_.cells(), 0.0);
  marginal_.assign(a_support_.size(), 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t b = binner_.cell(data.row_x(i));
    const std::size_t v = index_of(a_support_, data.a[i]);
    counts_[b][v] += 1.0;
    totals_[b] += 1.0;
    marginal_[v] += 1.0;
  }
  n_ = static_cast<double>(data.size());
}

std::pair<double, bool> PropensityEstimator::operator()(double a, std::span<const double> x) const {
  if (!contains_value(a_support_, a)) {
    throw DataError("unseen treatment value " + std::to_string(a));
  }
  const std::size_t b = binner_.cell(x);
  const std::size_t v = index_of(a_support_, a);
  double p = 0.0;
  bool fallback = false;
  if (totals_[b] > 0.0) {
    p = counts_[b][v] / totals_[b];
  } else {
    p = marginal_[v] / n_;
    fallback = true;
  }
  return {std::clamp(p, kPropensityClip, 1.0 - kPropensityClip), fallback};
}

FittedModel::FittedModel(const ObservedData& data, const FitConfig& cfg) : kind_(data.treatment) {
  data.validate();
  cfg.validate();
  for (std::size_t i = 0; i < data.mediators.size(); ++i) pmfs_.emplace_back(data, i, cfg);
  for (std::size_t l = 0; l <= data.mediators.size(); ++l) samplers_.emplace_back(data, l, cfg);
  if (kind_ == TreatmentKind::discrete) propensity_.emplace(data, cfg);
}

DiscreteDist FittedModel::mediator_pmf(std::size_t i, std::span<const double> x,
                                       std::span<const double> prior, double a) const {
  if (i < 1 || i > pmfs_.size()) {
    throw std::invalid_argument("model has no mediator M" + std::to_string(i));
  }
  PmfEstimate est = pmfs_[i - 1](x, prior, a);
  if (est.fallback) pmf_fallbacks_.fetch_add(1, std::memory_order_relaxed);
  return std::move(est.pmf);
}

OutcomeDist FittedModel::outcome(std::span<const double> x, std::span<const double> mediators,
                                 double a, std::size_t k, std::uint64_t seed) const {
  if (mediators.size() >= samplers_.size()) {
    throw std::invalid_argument("query has more mediators than the fitted data");
  }
  outcome_queries_.fetch_add(1, std::memory_order_relaxed);
  return samplers_[mediators.size()](x, mediators, a, k, seed);
}

std::optional<double> FittedModel::propensity(double a, std::span<const double> x) const {
  if (!propensity_) return std::nullopt;
  const auto [p, fallback] = (*propensity_)(a, x);
  if (fallback) propensity_fallbacks_.fetch_add(1, std::memory_order_relaxed);
  return p;
}

FitDiagnostics FittedModel::diagnostics() const {
  return {pmf_fallbacks_.load(), propensity_fallbacks_.load(), outcome_queries_.load()};
}

}  // namespace gmsm
