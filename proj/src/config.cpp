#include "gmsm/config.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "gmsm/error.hpp"
#include "gmsm/random.hpp"

namespace gmsm {

namespace {

using json = nlohmann::json;

// Reads one JSON object, records every value it hands out (defaults
// included) and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& in, std::string path) : in_(in), path_(std::move(path)) {
    if (!in_.is_object()) fail("must be an object");
  }

  bool has(const char* key) const { return in_.contains(key); }
  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(path_ + ": " + what); }
  std::string where(const char* key) const { return path_ + "." + key; }

  const json* find(const char* key) {
    auto it = in_.find(key);
    if (it == in_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  double real(const char* key, std::optional<double> fallback = std::nullopt) {
    const json* v = find(key);
    double out;
    if (v == nullptr) {
      if (!fallback) fail("missing required key '" + std::string(key) + "'");
      out = *fallback;
    } else {
      out = to_real(*v, where(key));
    }
    out_[key] = out;
    return out;
  }

  std::uint64_t count(const char* key, std::optional<std::uint64_t> fallback = std::nullopt) {
    const json* v = find(key);
    std::uint64_t out;
    if (v == nullptr) {
      if (!fallback) fail("missing required key '" + std::string(key) + "'");
      out = *fallback;
    } else if (v->is_number_unsigned()) {
      out = v->get<std::uint64_t>();
    } else if (v->is_number_integer() && v->get<std::int64_t>() >= 0) {
      out = static_cast<std::uint64_t>(v->get<std::int64_t>());
    } else {
      throw ConfigError(where(key) + ": expected a nonnegative integer");
    }
    out_[key] = out;
    return out;
  }

  bool flag(const char* key, bool fallback) {
    const json* v = find(key);
    bool out = fallback;
    if (v != nullptr) {
      if (!v->is_boolean()) throw ConfigError(where(key) + ": expected true or false");
      out = v->get<bool>();
    }
    out_[key] = out;
    return out;
  }

  std::string text(const char* key, std::optional<std::string> fallback = std::nullopt,
                   bool record = true) {
    const json* v = find(key);
    std::string out;
    if (v == nullptr) {
      if (!fallback) fail("missing required key '" + std::string(key) + "'");
      out = *fallback;
    } else {
      if (!v->is_string()) throw ConfigError(where(key) + ": expected a string");
      out = v->get<std::string>();
    }
    if (record) out_[key] = out;
    return out;
  }

  std::vector<double> reals(const char* key) {
    const json* v = find(key);
    if (v == nullptr) fail("missing required key '" + std::string(key) + "'");
    if (!v->is_array()) throw ConfigError(where(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : *v) out.push_back(to_real(e, where(key)));
    out_[key] = out;
    return out;
  }

  std::vector<std::string> texts(const char* key, bool required) {
    const json* v = find(key);
    std::vector<std::string> out;
    if (v == nullptr) {
      if (required) fail("missing required key '" + std::string(key) + "'");
    } else {
      if (!v->is_array()) throw ConfigError(where(key) + ": expected an array of strings");
      for (const auto& e : *v) {
        if (!e.is_string()) throw ConfigError(where(key) + ": expected an array of strings");
        out.push_back(e.get<std::string>());
      }
    }
    out_[key] = out;
    return out;
  }

  Section child(const char* key) {
    const json* v = find(key);
    if (v == nullptr) return Section(empty_object(), where(key));
    return Section(*v, where(key));
  }

  void put(const char* key, json value) { out_[key] = std::move(value); }

  json finish() const {
    for (auto it = in_.begin(); it != in_.end(); ++it) {
      if (!seen_.count(it.key())) fail("unknown key '" + it.key() + "'");
    }
    return out_.is_null() ? json::object() : out_;
  }

  static double to_real(const json& v, const std::string& at) {
    if (!v.is_number()) throw ConfigError(at + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(at + ": expected a finite number");
    return d;
  }

 private:
  static const json& empty_object() {
    static const json e = json::object();
    return e;
  }

  const json& in_;
  std::string path_;
  std::set<std::string> seen_;
  json out_ = json::object();
};

TreatmentKind parse_treatment(const std::string& s, const std::string& at) {
  if (s == "discrete" || s == "binary") return TreatmentKind::discrete;
  if (s == "continuous") return TreatmentKind::continuous;
  throw ConfigError(at + ": treatment must be 'discrete' or 'continuous', got '" + s + "'");
}

Command parse_command(const std::string& s) {
  for (Command c : {Command::bound, Command::sweep, Command::simulate, Command::oracle,
                    Command::validate}) {
    if (command_name(c) == s) return c;
  }
  throw ConfigError("config.command: unknown command '" + s + "'");
}

// [lo, hi] with null for an unbounded side.
Interval parse_interval(const json& v, const std::string& at) {
  if (!v.is_array() || v.size() != 2) throw ConfigError(at + ": expected [lo, hi]");
  Interval out;
  if (!v[0].is_null()) out.lo = Section::to_real(v[0], at);
  if (!v[1].is_null()) out.hi = Section::to_real(v[1], at);
  if (!(out.lo < out.hi)) throw ConfigError(at + ": interval needs lo < hi");
  return out;
}

json interval_json(const Interval& iv) {
  return json::array({std::isinf(iv.lo) ? json() : json(iv.lo),
                      std::isinf(iv.hi) ? json() : json(iv.hi)});
}

WeightFn parse_weight(const json& v, const std::string& at, json& resolved) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "propensity" || s == "msm") {
      resolved = "propensity";
      return WeightFn::propensity();
    }
    if (s == "zero" || s == "cmsm" || s == "lmsm") {
      resolved = "zero";
      return WeightFn::zero();
    }
    throw ConfigError(at + ": unknown weight '" + s + "'");
  }
  Section w(v, at);
  if (w.has("constant")) {
    const double q = w.real("constant");
    resolved = w.finish();
    try {
      return WeightFn::constant(q);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(at + ": " + e.what());
    }
  }
  if (!w.has("table")) w.fail("a weight object needs 'constant' or 'table'");
  Section t = w.child("table");
  RegionTable<double> table;
  table.fallback = t.real("fallback", 0.0);
  const json* cells = t.find("cells");
  json cells_out = json::array();
  if (cells != nullptr) {
    if (!cells->is_array()) throw ConfigError(at + ".table.cells: expected an array");
    for (std::size_t i = 0; i < cells->size(); ++i) {
      const std::string cat = at + ".table.cells[" + std::to_string(i) + "]";
      Section c((*cells)[i], cat);
      Region region;
      json xs = json::array();
      if (const json* x = c.find("x")) {
        if (!x->is_array()) throw ConfigError(cat + ".x: expected an array of intervals");
        for (const auto& iv : *x) {
          region.x.push_back(parse_interval(iv, cat + ".x"));
          xs.push_back(interval_json(region.x.back()));
        }
      }
      c.put("x", xs);
      if (const json* a = c.find("a")) region.a = parse_interval(*a, cat + ".a");
      c.put("a", interval_json(region.a));
      const double q = c.real("q");
      table.cells.emplace_back(region, q);
      cells_out.push_back(c.finish());
    }
  }
  t.put("cells", cells_out);
  w.put("table", t.finish());
  resolved = w.finish();
  try {
    return WeightFn::table(std::move(table));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(at + ": " + e.what());
  }
}

SensitivitySpec parse_sensitivity(const json& v, json& resolved) {
  if (!v.is_object()) throw ConfigError("config.sensitivity: must be an object");
  SensitivitySpec spec;
  resolved = json::object();
  for (auto it = v.begin(); it != v.end(); ++it) {
    const std::string at = "config.sensitivity." + it.key();
    Section e(it.value(), at);
    try {
      if (e.has("gamma")) {
        const double gamma = e.real("gamma");
        json weight_out;
        const json* w = e.find("weight");
        WeightFn weight = w == nullptr ? WeightFn::zero()
                                       : parse_weight(*w, at + ".weight", weight_out);
        if (w == nullptr) weight_out = "zero";
        e.put("weight", weight_out);
        spec.set_weighted(it.key(), gamma, std::move(weight));
      } else {
        const double lo = e.real("s_minus");
        const double hi = e.real("s_plus");
        spec.set_explicit(it.key(), lo, hi);
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& err) {
      throw ConfigError(at + ": " + err.what());
    }
    resolved[it.key()] = e.finish();
  }
  return spec;
}

DataSource parse_data(Section& s, std::uint64_t seed) {
  DataSource d;
  const bool csv = s.has("csv");
  const bool synthetic = s.has("synthetic");
  if (csv == synthetic) s.fail("exactly one of 'csv' and 'synthetic' is required");
  if (csv) {
    d.csv = s.text("csv");
    d.treatment = parse_treatment(s.text("treatment"), s.where("treatment"));
    if (!s.has("columns")) s.fail("missing required key 'columns'");
    Section c = s.child("columns");
    d.columns.x = c.texts("x", true);
    if (d.columns.x.empty()) c.fail("at least one covariate column is required");
    d.columns.a = c.text("a");
    d.columns.mediators = c.texts("mediators", false);
    d.columns.y = c.text("y");
    s.put("columns", c.finish());
  } else {
    Section g = s.child("synthetic");
    const std::string preset = g.text("preset");
    d.treatment = parse_treatment(g.text("treatment"), g.where("treatment"));
    g.put("treatment", treatment_name(d.treatment));
    ScmConfig scm;
    try {
      scm = ScmConfig::preset(preset, d.treatment);
    } catch (const std::invalid_argument& e) {
      g.fail(e.what());
    }
    d.n = g.count("n");
    if (d.n == 0) g.fail("n must be >= 1");
    scm.gamma_m1 = g.real("gamma_m1", scm.gamma_m1);
    scm.gamma_m2 = g.real("gamma_m2", scm.gamma_m2);
    scm.gamma_y = g.real("gamma_y", scm.gamma_y);
    scm.rho_m1 = g.real("rho_m1", scm.rho_m1);
    scm.rho_m2 = g.real("rho_m2", scm.rho_m2);
    scm.rho_y = g.real("rho_y", scm.rho_y);
    scm.negative_x_only = g.flag("negative_x_only", scm.negative_x_only);
    scm.seed = g.count("seed", mix_seed(seed, fnv1a("data")));
    try {
      scm.validate();
    } catch (const std::invalid_argument& e) {
      g.fail(e.what());
    }
    d.scm = scm;
    d.columns = ColumnRoles{{"x"}, "a", {"m1", "m2"}, "y"};
    d.include_hidden = s.flag("include_hidden", false);
    s.put("synthetic", g.finish());
  }
  return d;
}

QuerySpec parse_query(Section& s) {
  QuerySpec q;
  if (s.has("x") == s.has("x_grid")) s.fail("exactly one of 'x' and 'x_grid' is required");
  if (const json* x = s.find("x")) {
    if (!x->is_array() || x->empty()) throw ConfigError(s.where("x") + ": expected a non-empty array");
    for (const auto& p : *x) {
      if (p.is_array()) {
        std::vector<double> point;
        for (const auto& v : p) point.push_back(Section::to_real(v, s.where("x")));
        if (point.empty()) throw ConfigError(s.where("x") + ": empty covariate vector");
        q.x.push_back(std::move(point));
      } else {
        q.x.push_back({Section::to_real(p, s.where("x"))});
      }
    }
    for (const auto& p : q.x) {
      if (p.size() != q.x.front().size()) {
        throw ConfigError(s.where("x") + ": covariate vectors differ in dimension");
      }
    }
    s.put("x", q.x);
  } else {
    Section g = s.child("x_grid");
    const double from = g.real("from");
    const double to = g.real("to");
    const auto points = g.count("points");
    if (points < 1) g.fail("points must be >= 1");
    if (points > 1 && !(from < to)) g.fail("needs from < to");
    for (std::uint64_t j = 0; j < points; ++j) {
      const double t = points == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(points - 1);
      q.x.push_back({from + t * (to - from)});
    }
    s.put("x_grid", g.finish());
  }
  q.treatments = s.reals("treatments");
  if (q.treatments.empty()) s.fail("treatments must be non-empty");
  Section f = s.child("functional");
  const std::string kind = f.text("kind", "expectation");
  if (kind == "expectation") {
    q.functional = Functional::expectation();
  } else if (kind == "quantile") {
    const double alpha = f.real("alpha", 0.5);
    if (!(alpha > 0.0 && alpha < 1.0)) f.fail("alpha must lie in (0, 1)");
    q.functional = Functional::quantile(alpha);
  } else {
    f.fail("kind must be 'expectation' or 'quantile'");
  }
  s.put("functional", f.finish());
  if (s.has("contrast")) {
    q.contrast = s.reals("contrast");
    if (q.contrast->size() != q.treatments.size()) {
      s.fail("contrast must have as many entries as treatments");
    }
  }
  q.average = s.flag("average", false);
  return q;
}

}  // namespace

std::vector<std::string> QuerySpec::mediators() const {
  std::vector<std::string> out;
  for (std::size_t i = 1; i < treatments.size(); ++i) out.push_back("M" + std::to_string(i));
  return out;
}

CausalQuery QuerySpec::at(std::size_t i, const std::vector<double>& a) const {
  CausalQuery q;
  q.x = x.at(i);
  q.treatments = a;
  q.mediators = mediators();
  q.functional = functional;
  return q;
}

std::string command_name(Command c) {
  switch (c) {
    case Command::bound:
      return "bound";
    case Command::sweep:
      return "sweep";
    case Command::simulate:
      return "simulate";
    case Command::oracle:
      return "oracle";
    case Command::validate:
      return "validate";
  }
  return "bound";
}

std::string treatment_name(TreatmentKind k) {
  return k == TreatmentKind::discrete ? "discrete" : "continuous";
}

std::string config_hash(const json& resolved) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(resolved.dump())));
  return buf;
}

RunConfig parse_config(const json& doc) {
  RunConfig cfg;
  Section top(doc, "config");
  cfg.command = parse_command(top.text("command"));
  cfg.seed = top.count("seed", 0);
  cfg.threads = static_cast<unsigned>(top.count("threads", 1));
  if (cfg.threads == 0) top.fail("threads must be >= 1");
  cfg.output = top.text("output", "", false);
  cfg.k = top.count("k", 10000);
  if (cfg.k == 0) top.fail("k must be >= 1");

  if (top.has("data")) {
    Section d = top.child("data");
    cfg.data = parse_data(d, cfg.seed);
    top.put("data", d.finish());
  }

  Section fit = top.child("fit");
  cfg.fit.x_bins = static_cast<int>(fit.count("x_bins", 20));
  cfg.fit.knn_k = fit.count("knn_k", 0);
  cfg.fit.min_cell_count = fit.count("min_cell_count", 30);
  cfg.fit.a_bandwidth = fit.real("a_bandwidth", 0.0);
  cfg.fit.local_linear = fit.flag("local_linear", true);
  try {
    cfg.fit.validate();
  } catch (const std::invalid_argument& e) {
    fit.fail(e.what());
  }
  top.put("fit", fit.finish());

  if (const json* s = top.find("sensitivity")) {
    json resolved;
    cfg.sensitivity = parse_sensitivity(*s, resolved);
    top.put("sensitivity", resolved);
  }

  if (top.has("query")) {
    Section q = top.child("query");
    cfg.query = parse_query(q);
    top.put("query", q.finish());
  }

  if (top.has("sweep")) {
    Section s = top.child("sweep");
    SweepSpec sweep{s.text("node"), s.reals("gammas")};
    if (sweep.gammas.empty()) s.fail("gammas must be non-empty");
    for (double g : sweep.gammas) {
      if (!(g >= 1.0)) s.fail("every gamma must be >= 1");
    }
    cfg.sweep = sweep;
    top.put("sweep", s.finish());
  }

  if (top.has("bootstrap")) {
    Section b = top.child("bootstrap");
    cfg.bootstrap = b.count("replicates");
    if (cfg.bootstrap < 1) b.fail("replicates must be >= 1");
    top.put("bootstrap", b.finish());
  }

  if (top.has("oracle") || cfg.command == Command::oracle) {
    Section o = top.child("oracle");
    cfg.oracle_n_mc = o.count("n_mc", 1'000'000);
    if (cfg.oracle_n_mc == 0) o.fail("n_mc must be >= 1");
    top.put("oracle", o.finish());
  }

  if (top.has("validate") || cfg.command == Command::validate) {
    Section v = top.child("validate");
    ValidateSpec& spec = cfg.validate;
    json settings = json::array();
    if (const json* list = v.find("settings")) {
      if (!list->is_array() || list->empty()) {
        throw ConfigError(v.where("settings") + ": expected a non-empty array");
      }
      for (std::size_t i = 0; i < list->size(); ++i) {
        Section e((*list)[i], v.where("settings") + "[" + std::to_string(i) + "]");
        const std::string preset = e.text("preset");
        const TreatmentKind kind = parse_treatment(e.text("treatment"), e.where("treatment"));
        e.put("treatment", treatment_name(kind));
        try {
          (void)ScmConfig::preset(preset, kind);
        } catch (const std::invalid_argument& err) {
          e.fail(err.what());
        }
        spec.settings.emplace_back(preset, kind);
        settings.push_back(e.finish());
      }
    } else {
      for (TreatmentKind kind : {TreatmentKind::discrete, TreatmentKind::continuous}) {
        for (const char* p : {"setting_i", "setting_ii", "setting_iii"}) {
          spec.settings.emplace_back(p, kind);
          settings.push_back({{"preset", p}, {"treatment", treatment_name(kind)}});
        }
      }
    }
    v.put("settings", settings);
    spec.n = v.count("n", 50000);
    spec.grid_points = static_cast<int>(v.count("grid_points", 21));
    spec.delta = v.real("delta", 0.05);
    spec.gamma_margin = v.real("gamma_margin", 1.05);
    spec.n_mc = v.count("n_mc", 1'000'000);
    if (spec.n == 0 || spec.n_mc == 0) v.fail("n and n_mc must be >= 1");
    if (spec.grid_points < 2) v.fail("grid_points must be >= 2");
    if (!(spec.delta >= 0.0)) v.fail("delta must be >= 0");
    if (!(spec.gamma_margin >= 1.0)) v.fail("gamma_margin must be >= 1");
    top.put("validate", v.finish());
  }

  cfg.resolved = top.finish();
  cfg.resolved.erase("threads");

  // command-specific requirements
  const auto need = [&](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("command '" + command_name(cfg.command) + "' needs " + what);
  };
  switch (cfg.command) {
    case Command::bound:
    case Command::sweep:
      need(cfg.data.has_value(), "a 'data' section");
      need(cfg.query.has_value(), "a 'query' section");
      need(!cfg.sensitivity.entries().empty(), "a 'sensitivity' section");
      if (cfg.command == Command::sweep) {
        need(cfg.sweep.has_value(), "a 'sweep' section");
        need(!cfg.query->average, "per-point queries ('average' is not supported in sweeps)");
        need(cfg.sensitivity.contains(cfg.sweep->node),
             "a sensitivity entry for swept node '" + cfg.sweep->node + "'");
        need(std::holds_alternative<WeightedEntry>(cfg.sensitivity.at(cfg.sweep->node)),
             "a weighted (gamma) entry for swept node '" + cfg.sweep->node + "'");
      }
      for (const auto& node : cfg.query->mediators()) {
        need(cfg.sensitivity.contains(node), "a sensitivity entry for node '" + node + "'");
      }
      need(cfg.sensitivity.contains("Y"), "a sensitivity entry for node 'Y'");
      need(cfg.query->treatments.size() <= cfg.data->columns.mediators.size() + 1,
           "at most one more treatment than mediator columns");
      break;
    case Command::simulate:
      need(cfg.data && cfg.data->scm, "a 'data.synthetic' section");
      break;
    case Command::oracle:
      need(cfg.data && cfg.data->scm, "a 'data.synthetic' section");
      need(cfg.query.has_value(), "a 'query' section");
      need(!cfg.query->average, "per-point queries ('average' is not supported)");
      need(cfg.query->treatments.size() <= 3, "at most three treatments");
      need(cfg.query->x.front().size() == 1, "scalar covariates");
      break;
    case Command::validate:
      break;
  }
  if (cfg.command != Command::bound && cfg.command != Command::sweep && cfg.bootstrap > 0) {
    throw ConfigError("bootstrap is only available for 'bound' and 'sweep'");
  }
  cfg.hash = config_hash(cfg.resolved);
  return cfg;
}

}  // namespace gmsm
