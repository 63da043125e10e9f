#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace gmsm {

// Distributions used by the shift and functional layers. Quantiles follow
// the left-continuous generalized inverse inf{w : F(w) >= alpha}.

// Finite ordered support with probability masses. Categorical variables
// declare an integer encoding through `support`; `labels` is optional
// display metadata.
class DiscreteDist {
 public:
  DiscreteDist(std::vector<double> support, std::vector<double> probs,
               std::vector<std::string> labels = {});

  // Normalizes nonnegative weights; throws if they sum to zero.
  static DiscreteDist from_weights(std::vector<double> support, std::vector<double> weights);

  std::span<const double> support() const noexcept { return support_; }
  std::span<const double> probs() const noexcept { return probs_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return support_.size(); }

  double cdf(double w) const;
  double quantile(double alpha) const;
  double mean() const;

 private:
  std::vector<double> support_;
  std::vector<double> probs_;
  std::vector<std::string> labels_;
};

// Sorted sample of outcome draws standing in for a conditional density.
class SampleDist {
 public:
  // Rejects unsorted input.
  explicit SampleDist(std::vector<double> sorted_values);
  static SampleDist from_unsorted(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  // Empirical CDF: fraction of draws <= w.
  double cdf(double w) const;
  double quantile(double alpha) const;
  double mean() const;

 private:
  std::vector<double> values_;
};

class AnalyticDist {
 public:
  enum class Kind { standard_normal, uniform };

  static AnalyticDist standard_normal() { return AnalyticDist(Kind::standard_normal, 0.0, 1.0); }
  static AnalyticDist uniform(double lo, double hi);

  Kind kind() const noexcept { return kind_; }
  double cdf(double w) const;
  double quantile(double alpha) const;
  double mean() const;

 private:
  AnalyticDist(Kind kind, double lo, double hi) : kind_(kind), lo_(lo), hi_(hi) {}

  Kind kind_;
  double lo_;
  double hi_;
};

using Distribution = std::variant<DiscreteDist, SampleDist, AnalyticDist>;

double cdf(const Distribution& dist, double w);
double quantile(const Distribution& dist, double alpha);

// Throws std::invalid_argument unless alpha is in (0, 1).
void check_quantile_level(double alpha);

double normal_cdf(double z);
double normal_pdf(double z);
double normal_quantile(double p);

}  // namespace gmsm
