#include "gmsm/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/beta.hpp>
#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/beta_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "gmsm/error.hpp"
#include "gmsm/parallel.hpp"
#include "gmsm/random.hpp"

namespace gmsm {

namespace {

constexpr std::size_t kChunk = 8192;
constexpr std::size_t kOracleChunk = 65536;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Signal shared by both mediators: a sin(x) + (1 - a) sin(4x).
double blend(double x, double a) { return a * std::sin(x) + (1.0 - a) * std::sin(4.0 * x); }

double confounding_gate(const ScmConfig& c, double x) {
  return c.negative_x_only && !(x < 0.0) ? 0.0 : 1.0;
}

std::size_t node_index(std::string_view node) {
  if (node == "M1") return 0;
  if (node == "M2") return 1;
  if (node == "Y") return 2;
  throw std::invalid_argument("unknown SCM node '" + std::string(node) +
                              "'; expected M1, M2 or Y");
}

std::string describe_shape(double alpha, double x, double u1, double u2, double uy) {
  std::ostringstream msg;
  msg << "Beta shape parameter " << alpha << " <= 0 at x=" << x << ", u=(" << u1 << ", " << u2
      << ", " << uy << "); this configuration has no valid treatment distribution";
  return msg.str();
}

struct Draw {
  double m1, m2, y;
};

Draw propagate(const ScmConfig& c, double x, const double (&a)[3], double u1, double u2,
               double uy, double e1, double e2, double ey) {
  const double m1 = f_m1(x, a[0], u1, e1, c.rho_m1);
  const double m2 = f_m2(x, a[1], m1, u2, e2, c.rho_m2);
  return {m1, m2, f_y(x, a[2], m1, m2, uy, ey, c.rho_y)};
}

}  // namespace

void ScmConfig::validate() const {
  for (double r : {rho_m1, rho_m2, rho_y}) {
    if (!(r > 0.0) || !std::isfinite(r)) {
      throw std::invalid_argument("noise levels rho must be positive and finite");
    }
  }
  for (double g : {gamma_m1, gamma_m2, gamma_y}) {
    if (!std::isfinite(g)) throw std::invalid_argument("confounding strengths must be finite");
  }
}

ScmConfig ScmConfig::preset(std::string_view name, TreatmentKind kind) {
  ScmConfig c;
  c.treatment = kind;
  const bool binary = kind == TreatmentKind::discrete;
  if (name == "setting_i" || name == "setting_i_weighted") {
    c.gamma_y = 1.5;
    c.rho_y = binary ? 2.0 : 1.0;
    if (name == "setting_i_weighted") {
      if (binary) {
        throw std::invalid_argument("setting_i_weighted is defined for continuous treatments");
      }
      c.negative_x_only = true;
    }
  } else if (name == "setting_ii") {
    c.gamma_m1 = 1.5;
    c.gamma_y = 1.5;
    c.rho_m1 = 1.0;
  } else if (name == "setting_iii") {
    c.gamma_m1 = 1.5;
    c.gamma_m2 = 1.5;
    c.gamma_y = 1.5;
  } else {
    throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
  }
  return c;
}

double f_m1(double x, double a, double u, double eps, double rho) {
  return blend(x, a) + rho * ((u - 0.5) + eps) > 0.0 ? 1.0 : 0.0;
}

double f_m2(double x, double a, double m1, double u, double eps, double rho) {
  const double signal = m1 * blend(x, a) - (1.0 - m1) * blend(x, a);
  return signal + rho * ((u - 0.5) + eps) > 0.0 ? 1.0 : 0.0;
}

double f_y(double x, double a, double m1, double m2, double u, double eps, double rho) {
  const double s1 = std::sin(x);
  const double s4 = std::sin(4.0 * x);
  const double s8 = std::sin(8.0 * x);
  const double b = 1.0 - a;
  const double n1 = 1.0 - m1;
  const double n2 = 1.0 - m2;
  const double mean = a * m1 * m2 * s1 + b * m1 * m2 * s4 + a * m1 * n2 * s8 + b * m1 * n2 * s1 -
                      a * n1 * m2 * s1 - b * n1 * m2 * s4 - a * n1 * n2 * s8 - b * n1 * n2 * s1;
  return mean + rho * ((u - 0.5) + eps);
}

double beta_shape(const ScmConfig& c, double x, double u_m1, double u_m2, double u_y) {
  const double hidden =
      c.gamma_m1 * (u_m1 - 0.5) + c.gamma_m2 * (u_m2 - 0.5) + c.gamma_y * (u_y - 0.5);
  return 2.0 + x + confounding_gate(c, x) * hidden;
}

double treatment_likelihood(const ScmConfig& c, double a, double x, double u_m1, double u_m2,
                            double u_y) {
  if (c.treatment == TreatmentKind::discrete) {
    if (a != 0.0 && a != 1.0) throw std::invalid_argument("binary treatment must be 0 or 1");
    const double eta =
        3.0 * x + confounding_gate(c, x) * (c.gamma_m1 * u_m1 + c.gamma_m2 * u_m2 + c.gamma_y * u_y);
    const double p1 = sigmoid(eta);
    return a == 1.0 ? p1 : 1.0 - p1;
  }
  const double alpha = beta_shape(c, x, u_m1, u_m2, u_y);
  if (!(alpha > 0.0)) throw NumericError(describe_shape(alpha, x, u_m1, u_m2, u_y));
  if (!(a > 0.0 && a < 1.0)) return 0.0;
  return boost::math::pdf(boost::math::beta_distribution<double>(alpha, alpha), a);
}

Dataset sample_dataset(const ScmConfig& config, std::size_t n, unsigned threads) {
  config.validate();
  if (n == 0) throw std::invalid_argument("dataset size must be >= 1");
  Dataset d;
  for (auto* col : {&d.x, &d.a, &d.m1, &d.m2, &d.y, &d.u_m1, &d.u_m2, &d.u_y}) col->resize(n);

  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    const auto stream = [&](std::string_view name) {
      return make_engine(stream_seed(config.seed, name, c));
    };
    Engine ex = stream("x"), eu1 = stream("u_m1"), eu2 = stream("u_m2"), euy = stream("u_y");
    Engine ea = stream("a"), e1 = stream("eps_m1"), e2 = stream("eps_m2"), ey = stream("eps_y");
    boost::random::uniform_real_distribution<double> unif(-1.0, 1.0);
    boost::random::bernoulli_distribution<double> coin(0.5);
    boost::random::normal_distribution<double> noise;

    const std::size_t end = std::min(n, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      const double x = unif(ex);
      const double u1 = coin(eu1) ? 1.0 : 0.0;
      const double u2 = coin(eu2) ? 1.0 : 0.0;
      const double uy = coin(euy) ? 1.0 : 0.0;
      double a;
      if (config.treatment == TreatmentKind::discrete) {
        boost::random::bernoulli_distribution<double> treat(
            treatment_likelihood(config, 1.0, x, u1, u2, uy));
        a = treat(ea) ? 1.0 : 0.0;
      } else {
        const double alpha = beta_shape(config, x, u1, u2, uy);
        if (!(alpha > 0.0)) throw NumericError(describe_shape(alpha, x, u1, u2, uy));
        boost::random::beta_distribution<double> treat(alpha, alpha);
        a = treat(ea);
      }
      const double same[3] = {a, a, a};
      const Draw dr = propagate(config, x, same, u1, u2, uy, noise(e1), noise(e2), noise(ey));
      d.x[i] = x;
      d.a[i] = a;
      d.m1[i] = dr.m1;
      d.m2[i] = dr.m2;
      d.y[i] = dr.y;
      d.u_m1[i] = u1;
      d.u_m2[i] = u2;
      d.u_y[i] = uy;
    }
  });
  return d;
}

void write_csv(std::ostream& out, const Dataset& data, bool include_hidden) {
  out << "x,a,m1,m2,y";
  if (include_hidden) out << ",u_m1,u_m2,u_y";
  out << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.x[i] << ',' << data.a[i] << ',' << data.m1[i] << ',' << data.m2[i] << ','
        << data.y[i];
    if (include_hidden) out << ',' << data.u_m1[i] << ',' << data.u_m2[i] << ',' << data.u_y[i];
    out << '\n';
  }
}

double oracle_effect(const ScmConfig& config, const CausalQuery& query, std::size_t n_mc,
                     std::uint64_t seed, unsigned threads) {
  config.validate();
  query.validate();
  if (n_mc == 0) throw std::invalid_argument("oracle sample size must be >= 1");
  if (query.x.size() != 1) throw std::invalid_argument("the SCM has a scalar covariate");
  const std::size_t ell = query.length();
  if (ell > 2) throw std::invalid_argument("the SCM has two mediators");
  const double x = query.x[0];
  const double a[3] = {query.treatments[0], query.treatments[std::min<std::size_t>(1, ell)],
                       query.treatments[ell]};

  std::uint64_t root = mix_seed(seed, fnv1a("oracle-effect"));
  root = hash_doubles(root, query.x);
  root = hash_doubles(root, query.treatments);

  const bool mean_only = query.functional.kind == Functional::Kind::expectation;
  const std::size_t chunks = (n_mc + kOracleChunk - 1) / kOracleChunk;
  std::vector<double> sums(chunks, 0.0);
  std::vector<double> draws(mean_only ? 0 : n_mc);
  parallel_for(chunks, threads, [&](std::size_t c) {
    const auto stream = [&](std::string_view name) {
      return make_engine(stream_seed(root, name, c));
    };
    Engine eu1 = stream("u_m1"), eu2 = stream("u_m2"), euy = stream("u_y");
    Engine e1 = stream("eps_m1"), e2 = stream("eps_m2"), ey = stream("eps_y");
    boost::random::bernoulli_distribution<double> coin(0.5);
    boost::random::normal_distribution<double> noise;
    double sum = 0.0;
    double comp = 0.0;
    const std::size_t end = std::min(n_mc, (c + 1) * kOracleChunk);
    for (std::size_t i = c * kOracleChunk; i < end; ++i) {
      const double u1 = coin(eu1) ? 1.0 : 0.0;
      const double u2 = coin(eu2) ? 1.0 : 0.0;
      const double uy = coin(euy) ? 1.0 : 0.0;
      const double y = propagate(config, x, a, u1, u2, uy, noise(e1), noise(e2), noise(ey)).y;
      if (mean_only) {
        const double t = sum + y;
        comp += std::abs(sum) >= std::abs(y) ? (sum - t) + y : (y - t) + sum;
        sum = t;
      } else {
        draws[i] = y;
      }
    }
    sums[c] = sum + comp;
  });
  if (!mean_only) return SampleDist::from_unsorted(std::move(draws)).quantile(query.functional.alpha);
  double total = 0.0;
  for (double s : sums) total += s;
  return total / static_cast<double>(n_mc);
}

OracleGamma invert_ratios(TreatmentKind kind, double p, double r_plus, double r_minus) {
  OracleGamma g{p, r_plus, r_minus, 1.0, 1.0, 1.0};
  if (kind == TreatmentKind::discrete) {
    if (!(p > 0.0 && p < 1.0)) {
      throw NumericError("degenerate propensity " + std::to_string(p) + " in oracle cell");
    }
    const double denom = 1.0 / r_plus - p;
    if (!(denom > 0.0)) throw NumericError("confounder determines the treatment in oracle cell");
    g.gamma_plus = (1.0 - p) / denom;
    g.gamma_minus = (1.0 / r_minus - p) / (1.0 - p);
  } else {
    if (!(p > 0.0) || !(r_minus > 0.0)) {
      throw NumericError("treatment density vanishes in oracle cell");
    }
    g.gamma_plus = r_plus;
    g.gamma_minus = 1.0 / r_minus;
  }
  g.gamma_star = std::max({1.0, g.gamma_plus, g.gamma_minus});
  return g;
}

OracleGamma oracle_gamma(const ScmConfig& config, std::string_view node, double x, double a) {
  config.validate();
  const std::size_t w = node_index(node);
  // group[v] = mean likelihood over the other confounders with u_W = v
  double group[2] = {0.0, 0.0};
  for (int bits = 0; bits < 8; ++bits) {
    const double u[3] = {static_cast<double>(bits & 1), static_cast<double>((bits >> 1) & 1),
                         static_cast<double>((bits >> 2) & 1)};
    group[static_cast<int>(u[w])] += 0.25 * treatment_likelihood(config, a, x, u[0], u[1], u[2]);
  }
  const double p = 0.5 * (group[0] + group[1]);
  if (!(p > 0.0)) throw NumericError("treatment has zero likelihood in oracle cell");
  const double r0 = group[0] / p;
  const double r1 = group[1] / p;
  return invert_ratios(config.treatment, p, std::max(r0, r1), std::min(r0, r1));
}

OracleGamma oracle_gamma_mc(const ScmConfig& config, std::string_view node, double x, double a,
                            std::size_t n_mc, std::uint64_t seed, int x_bins) {
  const std::size_t w = node_index(node);
  if (x_bins < 1) throw std::invalid_argument("x_bins must be >= 1");
  if (!(x >= -1.0 && x <= 1.0)) throw std::invalid_argument("x must lie in [-1, 1]");
  ScmConfig sim = config;
  sim.seed = mix_seed(seed, fnv1a("oracle-gamma"));
  const Dataset d = sample_dataset(sim, n_mc);
  const auto bin_of = [&](double v) {
    return std::min(x_bins - 1, static_cast<int>(std::floor((v + 1.0) / 2.0 * x_bins)));
  };
  const int target = bin_of(x);
  const std::vector<double>* hidden[3] = {&d.u_m1, &d.u_m2, &d.u_y};
  std::vector<double> all;
  std::vector<double> by_u[2];
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (bin_of(d.x[i]) != target) continue;
    all.push_back(d.a[i]);
    by_u[(*hidden[w])[i] > 0.5 ? 1 : 0].push_back(d.a[i]);
  }
  if (by_u[0].empty() || by_u[1].empty()) throw NumericError("empty oracle x-bin");

  double est[3];
  if (config.treatment == TreatmentKind::discrete) {
    const auto freq = [&](const std::vector<double>& v) {
      return static_cast<double>(std::count(v.begin(), v.end(), a)) /
             static_cast<double>(v.size());
    };
    est[0] = freq(all);
    est[1] = freq(by_u[0]);
    est[2] = freq(by_u[1]);
  } else {
    // one Silverman bandwidth for the whole bin keeps numerator and
    // denominator smoothing identical
    const double n = static_cast<double>(all.size());
    double mean = 0.0;
    for (double v : all) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : all) var += (v - mean) * (v - mean);
    const double h = 1.06 * std::sqrt(var / (n - 1.0)) * std::pow(n, -0.2);
    const auto kde = [&](const std::vector<double>& v) {
      double acc = 0.0;
      for (double s : v) acc += normal_pdf((a - s) / h);
      return acc / (static_cast<double>(v.size()) * h);
    };
    est[0] = kde(all);
    est[1] = kde(by_u[0]);
    est[2] = kde(by_u[1]);
  }
  if (!(est[0] > 0.0)) throw NumericError("treatment never observed in oracle x-bin");
  const double r0 = est[1] / est[0];
  const double r1 = est[2] / est[0];
  return invert_ratios(config.treatment, est[0], std::max(r0, r1), std::min(r0, r1));
}

BenchmarkSetting benchmark_setting(std::string_view preset, TreatmentKind kind) {
  BenchmarkSetting s{std::string(preset), ScmConfig::preset(preset, kind), {}, {}};
  const bool binary = kind == TreatmentKind::discrete;
  if (preset == "setting_i" || preset == "setting_i_weighted") {
    s.treatments = binary ? std::vector<double>{1.0} : std::vector<double>{0.6};
  } else if (preset == "setting_ii") {
    s.treatments = binary ? std::vector<double>{1.0, 0.0} : std::vector<double>{0.9, 0.5};
    s.mediators = {"M1"};
  } else {
    s.treatments =
        binary ? std::vector<double>{1.0, 0.0, 0.0} : std::vector<double>{0.2, 0.4, 0.5};
    s.mediators = {"M1", "M2"};
  }
  return s;
}

}  // namespace gmsm
