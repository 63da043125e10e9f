#include "gmsm/bounds.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "gmsm/parallel.hpp"
#include "gmsm/random.hpp"

namespace gmsm {

void CausalQuery::validate() const {
  if (treatments.size() != mediators.size() + 1) {
    throw std::invalid_argument("query with " + std::to_string(mediators.size()) +
                                " mediators needs " + std::to_string(mediators.size() + 1) +
                                " treatments, got " + std::to_string(treatments.size()));
  }
  if (functional.kind == Functional::Kind::quantile) check_quantile_level(functional.alpha);
}

DiscreteDist CallbackModel::mediator_pmf(std::size_t i, std::span<const double> x,
                                         std::span<const double> prior, double a) const {
  if (!mediator_) throw std::invalid_argument("model has no mediator conditionals");
  return mediator_(i, x, prior, a);
}

OutcomeDist CallbackModel::outcome(std::span<const double> x, std::span<const double> mediators,
                                   double a, std::size_t k, std::uint64_t seed) const {
  return outcome_(x, mediators, a, k, seed);
}

std::optional<double> CallbackModel::propensity(double a, std::span<const double> x) const {
  if (!propensity_) return std::nullopt;
  return propensity_(a, x);
}

std::uint64_t outcome_cell_seed(std::uint64_t root, std::span<const double> x,
                                std::span<const double> mediators, double a) {
  std::uint64_t h = mix_seed(root, fnv1a("outcome-cell"));
  h = hash_doubles(h, x);
  h = mix_seed(h, mediators.size());
  h = hash_doubles(h, mediators);
  return hash_doubles(h, std::span<const double>(&a, 1));
}

double mediator_step(std::span<const double> probs, std::span<const double> downstream,
                     const RatioBounds& bounds, Direction dir) {
  if (probs.size() != downstream.size()) {
    throw std::invalid_argument("mediator pmf and downstream values differ in length");
  }
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return downstream[l] < downstream[r];
  });
  std::vector<double> permuted(order.size());
  for (std::size_t j = 0; j < order.size(); ++j) permuted[j] = probs[order[j]];
  const std::vector<double> shifted = shift_masses(permuted, bounds, dir);
  double total = 0.0;
  for (std::size_t j = 0; j < order.size(); ++j) total += downstream[order[j]] * shifted[j];
  return total;
}

namespace {

NodeReport make_report(const ConditionalModel& model, const SensitivitySpec& spec,
                       const std::string& node, double a, std::span<const double> x) {
  const std::optional<double> prop = model.propensity(a, x);
  const RatioBounds rb = ratio_bounds(spec, node, a, x, prop);
  const TreatmentKind kind = model.treatment_kind();
  const bool sharp = prop ? is_sharp(rb, *prop, kind) : kind == TreatmentKind::continuous;
  return {node, a, rb, prop, sharp};
}

// Mediator tree: one node per reachable prefix m_1..m_{i-1}.
struct TreeNode {
  std::vector<double> support;
  std::vector<double> probs;
  // index of the child node, or of the leaf at the last level; -1 for
  // support points without mass
  std::vector<long> child;
};

struct Leaf {
  std::vector<double> mediators;
  double upper = 0.0;
  double lower = 0.0;
  bool capped = false;
};

class Evaluator {
 public:
  Evaluator(const ConditionalModel& model, const CausalQuery& query, const BoundOptions& opts)
      : model_(model), query_(query), opts_(opts) {}

  BoundsResult run(const SensitivitySpec& spec) {
    query_.validate();
    if (opts_.k == 0) throw std::invalid_argument("outcome sample size k must be >= 1");
    const std::size_t ell = query_.length();
    const std::span<const double> x = query_.x;

    BoundsResult result{};
    for (std::size_t i = 0; i < ell; ++i) {
      result.nodes.push_back(make_report(model_, spec, query_.mediators[i],
                                         query_.treatments[i], x));
    }
    result.nodes.push_back(make_report(model_, spec, query_.outcome, query_.treatments[ell], x));
    const RatioBounds& outcome_bounds = result.nodes.back().bounds;

    if (ell == 0) {
      leaves_.push_back(Leaf{});
    } else {
      build(1, {});
    }
    parallel_for(leaves_.size(), opts_.threads,
                 [&](std::size_t j) { evaluate_leaf(leaves_[j], outcome_bounds); });

    if (ell == 0) {
      result.upper = leaves_[0].upper;
      result.lower = leaves_[0].lower;
    } else {
      result.upper = fold(0, result.nodes, Direction::upper);
      result.lower = fold(0, result.nodes, Direction::lower);
    }
    result.k = opts_.k;
    result.outcome_cells = leaves_.size();
    result.quantile_capped =
        std::any_of(leaves_.begin(), leaves_.end(), [](const Leaf& l) { return l.capped; });
    return result;
  }

 private:
  long build(std::size_t level, std::vector<double> prefix) {
    const std::size_t ell = query_.length();
    const DiscreteDist pmf =
        model_.mediator_pmf(level, query_.x, prefix, query_.treatments[level - 1]);
    const long id = static_cast<long>(tree_.size());
    tree_.push_back(TreeNode{{pmf.support().begin(), pmf.support().end()},
                             {pmf.probs().begin(), pmf.probs().end()},
                             std::vector<long>(pmf.size(), -1)});
    for (std::size_t j = 0; j < pmf.size(); ++j) {
      if (!(pmf.probs()[j] > 0.0)) continue;
      std::vector<double> path = prefix;
      path.push_back(pmf.support()[j]);
      long child;
      if (level == ell) {
        child = static_cast<long>(leaves_.size());
        leaves_.push_back(Leaf{std::move(path)});
      } else {
        child = build(level + 1, std::move(path));
      }
      tree_[static_cast<std::size_t>(id)].child[j] = child;
    }
    return id;
  }

  void evaluate_leaf(Leaf& leaf, const RatioBounds& bounds) const {
    const double a = query_.treatments.back();
    const std::uint64_t seed = outcome_cell_seed(opts_.seed, query_.x, leaf.mediators, a);
    const OutcomeDist dist = model_.outcome(query_.x, leaf.mediators, a, opts_.k, seed);
    const Functional& f = query_.functional;
    if (const auto* pmf = std::get_if<DiscreteDist>(&dist)) {
      leaf.upper = apply_discrete(f, shift_discrete(*pmf, bounds, Direction::upper));
      leaf.lower = apply_discrete(f, shift_discrete(*pmf, bounds, Direction::lower));
      return;
    }
    const auto& sample = std::get<SampleDist>(dist);
    const SampledQuantile up = apply_sampled(f, sample, bounds, Direction::upper);
    const SampledQuantile lo = apply_sampled(f, sample, bounds, Direction::lower);
    leaf.upper = up.value;
    leaf.lower = lo.value;
    leaf.capped = up.capped || lo.capped;
  }

  double fold(long id, const std::vector<NodeReport>& reports, Direction dir) const {
    return fold_level(static_cast<std::size_t>(id), 1, reports, dir);
  }

  double fold_level(std::size_t id, std::size_t level, const std::vector<NodeReport>& reports,
                    Direction dir) const {
    const TreeNode& node = tree_[id];
    std::vector<double> downstream(node.support.size(), 0.0);
    for (std::size_t j = 0; j < node.support.size(); ++j) {
      const long c = node.child[j];
      if (c < 0) continue;
      const auto idx = static_cast<std::size_t>(c);
      if (level == query_.length()) {
        downstream[j] = dir == Direction::upper ? leaves_[idx].upper : leaves_[idx].lower;
      } else {
        downstream[j] = fold_level(idx, level + 1, reports, dir);
      }
    }
    return mediator_step(node.probs, downstream, reports[level - 1].bounds, dir);
  }

  const ConditionalModel& model_;
  const CausalQuery& query_;
  const BoundOptions& opts_;
  std::vector<TreeNode> tree_;
  std::vector<Leaf> leaves_;
};

}  // namespace

BoundsResult compute_bounds(const ConditionalModel& model, const CausalQuery& query,
                            const SensitivitySpec& spec, const BoundOptions& opts) {
  return Evaluator(model, query, opts).run(spec);
}

double bound_no_mediators(const ConditionalModel& model, const CausalQuery& query,
                          const SensitivitySpec& spec, Direction dir, const BoundOptions& opts) {
  if (query.length() != 0) throw std::invalid_argument("query has mediators");
  const BoundsResult r = compute_bounds(model, query, spec, opts);
  return dir == Direction::upper ? r.upper : r.lower;
}

double bound_with_mediators(const ConditionalModel& model, const CausalQuery& query,
                            const SensitivitySpec& spec, Direction dir,
                            const BoundOptions& opts) {
  if (query.length() == 0) throw std::invalid_argument("query has no mediators");
  const BoundsResult r = compute_bounds(model, query, spec, opts);
  return dir == Direction::upper ? r.upper : r.lower;
}

EffectInterval bound_average(const ConditionalModel& model, const CausalQuery& query,
                             const SensitivitySpec& spec,
                             const std::vector<std::vector<double>>& x_sample,
                             const BoundOptions& opts) {
  if (x_sample.empty()) throw std::invalid_argument("covariate sample is empty");
  std::vector<EffectInterval> per_x(x_sample.size());
  BoundOptions inner = opts;
  inner.threads = 1;
  parallel_for(x_sample.size(), opts.threads, [&](std::size_t i) {
    CausalQuery q = query;
    q.x = x_sample[i];
    const BoundsResult r = compute_bounds(model, q, spec, inner);
    per_x[i] = {r.lower, r.upper};
  });
  EffectInterval mean{0.0, 0.0};
  for (const auto& e : per_x) {
    mean.lower += e.lower;
    mean.upper += e.upper;
  }
  const double n = static_cast<double>(per_x.size());
  return {mean.lower / n, mean.upper / n};
}

EffectInterval bound_difference(const ConditionalModel& model, const CausalQuery& first,
                                const CausalQuery& second, const SensitivitySpec& spec,
                                const BoundOptions& opts) {
  if (first.x != second.x) throw std::invalid_argument("difference queries must share x");
  if (first.functional.kind != second.functional.kind ||
      (first.functional.kind == Functional::Kind::quantile &&
       first.functional.alpha != second.functional.alpha)) {
    throw std::invalid_argument("difference queries must share the functional");
  }
  if (first.mediators != second.mediators || first.outcome != second.outcome) {
    throw std::invalid_argument("difference queries must share the mediator chain");
  }
  const BoundsResult one = compute_bounds(model, first, spec, opts);
  const BoundsResult two = compute_bounds(model, second, spec, opts);
  return {one.lower - two.upper, one.upper - two.lower};
}

}  // namespace gmsm
