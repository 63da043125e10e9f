#include "gmsm/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <boost/random/uniform_int_distribution.hpp>

#include "CLI11.hpp"

#include "gmsm/benchmark.hpp"
#include "gmsm/error.hpp"
#include "gmsm/parallel.hpp"
#include "gmsm/random.hpp"

namespace gmsm::cli {

namespace {

using json = nlohmann::json;

constexpr std::size_t kBootstrapWarnBelow = 20;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  std::string out(s.substr(first, last - first + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) return out;
    start = comma + 1;
  }
}

double parse_cell(const std::string& text, std::size_t line, const std::string& column) {
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (begin != end && *begin == '+') ++begin;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw DataError("line " + std::to_string(line) + ", column '" + column +
                    "': expected a finite number, got '" + text + "'");
  }
  return v;
}

// Interval on one x point; node flags are AND-ed over every cell touched.
struct PointBound {
  double lower = 0.0;
  double upper = 0.0;
  std::map<std::string, bool> sharp;
  bool capped = false;
};

void merge_flags(PointBound& into, const BoundsResult& r) {
  for (const auto& n : r.nodes) {
    auto [it, fresh] = into.sharp.emplace(n.node, n.sharp);
    if (!fresh) it->second = it->second && n.sharp;
  }
  into.capped = into.capped || r.quantile_capped;
}

struct Task {
  std::size_t point;  // index into query.x; ignored for averaged queries
  std::optional<double> gamma;
};

PointBound evaluate_point(const ConditionalModel& model, const RunConfig& cfg,
                          const SensitivitySpec& spec, std::size_t i) {
  const QuerySpec& q = *cfg.query;
  const BoundOptions opts{cfg.k, mix_seed(cfg.seed, fnv1a("bounds")), 1};
  PointBound out;
  const BoundsResult first = compute_bounds(model, q.at(i, q.treatments), spec, opts);
  merge_flags(out, first);
  out.lower = first.lower;
  out.upper = first.upper;
  if (q.contrast) {
    const BoundsResult second = compute_bounds(model, q.at(i, *q.contrast), spec, opts);
    merge_flags(out, second);
    out.lower = first.lower - second.upper;
    out.upper = first.upper - second.lower;
  }
  return out;
}

std::vector<PointBound> evaluate(const ConditionalModel& model, const RunConfig& cfg,
                                 const std::vector<Task>& tasks) {
  const QuerySpec& q = *cfg.query;
  std::vector<PointBound> out(tasks.size());
  const auto spec_for = [&](const Task& t) {
    return t.gamma ? cfg.sensitivity.with_gamma(cfg.sweep->node, *t.gamma) : cfg.sensitivity;
  };
  if (q.average) {
    // one task per gamma; parallelize over covariate points instead
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      const SensitivitySpec spec = spec_for(tasks[t]);
      std::vector<PointBound> points(q.x.size());
      parallel_for(q.x.size(), cfg.threads,
                   [&](std::size_t i) { points[i] = evaluate_point(model, cfg, spec, i); });
      const double n = static_cast<double>(points.size());
      for (const auto& p : points) {
        out[t].lower += p.lower / n;
        out[t].upper += p.upper / n;
        out[t].capped = out[t].capped || p.capped;
        for (const auto& [node, ok] : p.sharp) {
          auto [it, fresh] = out[t].sharp.emplace(node, ok);
          if (!fresh) it->second = it->second && ok;
        }
      }
    }
    return out;
  }
  parallel_for(tasks.size(), cfg.threads, [&](std::size_t t) {
    out[t] = evaluate_point(model, cfg, spec_for(tasks[t]), tasks[t].point);
  });
  return out;
}

struct Interval95 {
  double lo;
  double hi;
};

struct BootstrapSummary {
  std::size_t replicates = 0;
  std::vector<Interval95> lower;
  std::vector<Interval95> upper;
  bool warning = false;
};

// Member 0 is the original sample, so one replicate reproduces the point
// estimate.
BootstrapSummary bootstrap(const ObservedData& data, const RunConfig& cfg,
                           const std::vector<Task>& tasks,
                           const std::vector<PointBound>& point) {
  BootstrapSummary s;
  s.replicates = cfg.bootstrap;
  s.warning = cfg.bootstrap < kBootstrapWarnBelow;
  std::vector<std::vector<double>> lows(tasks.size()), highs(tasks.size());
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    lows[t].push_back(point[t].lower);
    highs[t].push_back(point[t].upper);
  }
  std::vector<std::size_t> rows(data.size());
  for (std::size_t r = 1; r < cfg.bootstrap; ++r) {
    Engine eng = make_engine(stream_seed(cfg.seed, "bootstrap", r));
    boost::random::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    for (auto& i : rows) i = pick(eng);
    const FittedModel model(data.subset(rows), cfg.fit);
    const auto res = evaluate(model, cfg, tasks);
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      lows[t].push_back(res[t].lower);
      highs[t].push_back(res[t].upper);
    }
  }
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    s.lower.push_back({percentile(lows[t], 0.025), percentile(lows[t], 0.975)});
    s.upper.push_back({percentile(highs[t], 0.025), percentile(highs[t], 0.975)});
  }
  return s;
}

json gamma_summary(const SensitivitySpec& spec) {
  json out = json::object();
  for (const auto& [node, entry] : spec.entries()) {
    if (const auto* w = std::get_if<WeightedEntry>(&entry)) {
      out[node] = w->gamma;
    } else {
      const auto& pair = std::get<ExplicitEntry>(entry).bounds.fallback;
      out[node] = {{"s_minus", pair.s_minus}, {"s_plus", pair.s_plus}};
    }
  }
  return out;
}

json functional_json(const Functional& f) {
  if (f.kind == Functional::Kind::expectation) return {{"kind", "expectation"}};
  return {{"kind", "quantile"}, {"alpha", f.alpha}};
}

std::string warning_text(const BootstrapSummary& s) {
  return s.warning ? "fewer than " + std::to_string(kBootstrapWarnBelow) + " replicates" : "";
}

int run_bound(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  const ObservedData data = load_data(cfg);
  const FittedModel model(data, cfg.fit);
  const QuerySpec& q = *cfg.query;
  std::vector<Task> tasks;
  if (q.average) {
    tasks.push_back({0, std::nullopt});
  } else {
    for (std::size_t i = 0; i < q.x.size(); ++i) tasks.push_back({i, std::nullopt});
  }
  const auto point = evaluate(model, cfg, tasks);
  const FitDiagnostics diag = model.diagnostics();
  std::optional<BootstrapSummary> boot;
  if (cfg.bootstrap > 0) {
    boot = bootstrap(data, cfg, tasks, point);
    if (boot->warning) log << "warning: " << warning_text(*boot) << " in the bootstrap\n";
  }

  json records = json::array();
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    json r;
    r["config_hash"] = cfg.hash;
    if (q.average) {
      r["x"] = nullptr;
      r["average_over"] = q.x.size();
    } else {
      r["x"] = q.x[tasks[t].point];
    }
    r["treatments"] = q.treatments;
    if (q.contrast) r["contrast"] = *q.contrast;
    r["functional"] = functional_json(q.functional);
    r["gammas"] = gamma_summary(cfg.sensitivity);
    r["lower"] = point[t].lower;
    r["upper"] = point[t].upper;
    r["sharp"] = point[t].sharp;
    r["quantile_capped"] = point[t].capped;
    r["k"] = cfg.k;
    r["seed"] = cfg.seed;
    if (boot) {
      r["ci"] = {{"level", 0.95},
                 {"replicates", boot->replicates},
                 {"lower", {boot->lower[t].lo, boot->lower[t].hi}},
                 {"upper", {boot->upper[t].lo, boot->upper[t].hi}},
                 {"warning", boot->warning ? json(warning_text(*boot)) : json()}};
    }
    records.push_back(std::move(r));
  }
  json doc;
  doc["command"] = "bound";
  doc["config_hash"] = cfg.hash;
  doc["config"] = cfg.resolved;
  doc["records"] = std::move(records);
  doc["diagnostics"] = {{"rows", data.size()},
                        {"pmf_fallbacks", diag.pmf_fallbacks},
                        {"propensity_fallbacks", diag.propensity_fallbacks},
                        {"outcome_queries", diag.outcome_queries}};
  out << doc.dump(2) << '\n';
  return 0;
}

std::string x_header(std::size_t dims) {
  if (dims == 1) return "x";
  std::string h;
  for (std::size_t d = 0; d < dims; ++d) h += (d ? ",x" : "x") + std::to_string(d + 1);
  return h;
}

std::string x_cells(const std::vector<double>& x) {
  std::string s;
  for (std::size_t d = 0; d < x.size(); ++d) s += (d ? "," : "") + format_number(x[d]);
  return s;
}

int run_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  const ObservedData data = load_data(cfg);
  const FittedModel model(data, cfg.fit);
  const QuerySpec& q = *cfg.query;
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < q.x.size(); ++i) {
    for (double g : cfg.sweep->gammas) tasks.push_back({i, g});
  }
  const auto point = evaluate(model, cfg, tasks);
  std::optional<BootstrapSummary> boot;
  if (cfg.bootstrap > 0) {
    boot = bootstrap(data, cfg, tasks, point);
    if (boot->warning) log << "warning: " << warning_text(*boot) << " in the bootstrap\n";
  }
  out << "config_hash," << x_header(q.x.front().size()) << ",node,gamma,lower,upper";
  if (boot) out << ",ci_lower_lo,ci_lower_hi,ci_upper_lo,ci_upper_hi,replicates,warning";
  out << '\n';
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    out << cfg.hash << ',' << x_cells(q.x[tasks[t].point]) << ',' << cfg.sweep->node << ','
        << format_number(*tasks[t].gamma) << ',' << format_number(point[t].lower) << ','
        << format_number(point[t].upper);
    if (boot) {
      out << ',' << format_number(boot->lower[t].lo) << ',' << format_number(boot->lower[t].hi)
          << ',' << format_number(boot->upper[t].lo) << ',' << format_number(boot->upper[t].hi)
          << ',' << boot->replicates << ',' << (boot->warning ? "few_replicates" : "");
    }
    out << '\n';
  }
  return 0;
}

int run_simulate(const RunConfig& cfg, std::ostream& out) {
  const DataSource& src = *cfg.data;
  const Dataset d = sample_dataset(*src.scm, src.n, cfg.threads);
  out << "x,a,m1,m2,y";
  if (src.include_hidden) out << ",u_m1,u_m2,u_y";
  out << ",config_hash\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    out << format_number(d.x[i]) << ',' << format_number(d.a[i]) << ',' << format_number(d.m1[i])
        << ',' << format_number(d.m2[i]) << ',' << format_number(d.y[i]);
    if (src.include_hidden) {
      out << ',' << format_number(d.u_m1[i]) << ',' << format_number(d.u_m2[i]) << ','
          << format_number(d.u_y[i]);
    }
    out << ',' << cfg.hash << '\n';
  }
  return 0;
}

int run_oracle(const RunConfig& cfg, std::ostream& out) {
  const ScmConfig& scm = *cfg.data->scm;
  const QuerySpec& q = *cfg.query;
  const auto mediators = q.mediators();
  std::vector<std::string> nodes = mediators;
  nodes.push_back("Y");
  const std::uint64_t seed = mix_seed(cfg.seed, fnv1a("oracle"));
  std::vector<double> effect(q.x.size());
  std::vector<std::vector<double>> gamma_star(q.x.size(), std::vector<double>(nodes.size()));
  parallel_for(q.x.size(), cfg.threads, [&](std::size_t i) {
    effect[i] = oracle_effect(scm, q.at(i, q.treatments), cfg.oracle_n_mc, seed);
    if (q.contrast) effect[i] -= oracle_effect(scm, q.at(i, *q.contrast), cfg.oracle_n_mc, seed);
    for (std::size_t n = 0; n < nodes.size(); ++n) {
      gamma_star[i][n] = oracle_gamma(scm, nodes[n], q.x[i][0], q.treatments[n]).gamma_star;
    }
  });
  out << "config_hash,x,oracle";
  for (const auto& n : nodes) out << ",gamma_star_" << n;
  out << '\n';
  for (std::size_t i = 0; i < q.x.size(); ++i) {
    out << cfg.hash << ',' << format_number(q.x[i][0]) << ',' << format_number(effect[i]);
    for (double g : gamma_star[i]) out << ',' << format_number(g);
    out << '\n';
  }
  return 0;
}

int run_validate(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  const ValidateSpec& v = cfg.validate;
  ValidationOptions opts;
  opts.n = v.n;
  opts.grid_points = v.grid_points;
  opts.k = cfg.k;
  opts.n_mc = v.n_mc;
  opts.gamma_margin = v.gamma_margin;
  opts.delta = v.delta;
  opts.functional = cfg.query ? cfg.query->functional : Functional::expectation();
  opts.fit = cfg.fit;
  opts.seed = cfg.seed;
  opts.threads = cfg.threads;

  int code = 0;
  out << "config_hash,setting,treatment,x,oracle,lower,upper,covered\n";
  for (const auto& [preset, kind] : v.settings) {
    const std::string label = preset + " " + treatment_name(kind);
    try {
      const ValidationReport r = validate_setting(benchmark_setting(preset, kind), opts);
      for (const auto& g : r.grid) {
        out << cfg.hash << ',' << preset << ',' << treatment_name(kind) << ','
            << format_number(g.x) << ',' << format_number(g.oracle) << ','
            << format_number(g.lower) << ',' << format_number(g.upper) << ','
            << (g.covered ? 1 : 0) << '\n';
      }
      log << label << ": coverage " << format_number(r.coverage) << (r.passed ? " pass" : " FAIL")
          << " (gamma";
      for (const auto& [node, gamma] : r.gammas) log << ' ' << node << '=' << format_number(gamma);
      log << ")\n";
    } catch (const NumericError& e) {
      log << label << ": numeric failure: " << e.what() << '\n';
      code = 3;
    }
  }
  return code;
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

ObservedData read_csv(std::istream& in, const ColumnRoles& roles, TreatmentKind kind) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV input is empty; a header row is required");
  const auto header = split(line);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!index.emplace(header[i], i).second) {
      throw DataError("CSV header repeats column '" + header[i] + "'");
    }
  }
  const auto column = [&](const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) throw ConfigError("column '" + name + "' is not in the CSV header");
    return it->second;
  };
  std::vector<std::size_t> xs, ms;
  for (const auto& c : roles.x) xs.push_back(column(c));
  for (const auto& c : roles.mediators) ms.push_back(column(c));
  const std::size_t a = column(roles.a);
  const std::size_t y = column(roles.y);

  ObservedData d;
  d.treatment = kind;
  d.x.resize(xs.size());
  d.mediators.resize(ms.size());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw DataError("line " + std::to_string(lineno) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < xs.size(); ++j) {
      d.x[j].push_back(parse_cell(cells[xs[j]], lineno, roles.x[j]));
    }
    for (std::size_t j = 0; j < ms.size(); ++j) {
      d.mediators[j].push_back(parse_cell(cells[ms[j]], lineno, roles.mediators[j]));
    }
    d.a.push_back(parse_cell(cells[a], lineno, roles.a));
    d.y.push_back(parse_cell(cells[y], lineno, roles.y));
  }
  d.validate();
  return d;
}

ObservedData load_data(const RunConfig& cfg) {
  if (!cfg.data) throw ConfigError("no data source configured");
  const DataSource& src = *cfg.data;
  if (src.csv) {
    std::ifstream in(*src.csv);
    if (!in) throw DataError("cannot open CSV file '" + *src.csv + "'");
    return read_csv(in, src.columns, src.treatment);
  }
  const Dataset d = sample_dataset(*src.scm, src.n, cfg.threads);
  return ObservedData::from_dataset(d, src.treatment);
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  switch (cfg.command) {
    case Command::bound:
      return run_bound(cfg, out, log);
    case Command::sweep:
      return run_sweep(cfg, out, log);
    case Command::simulate:
      return run_simulate(cfg, out);
    case Command::oracle:
      return run_oracle(cfg, out);
    case Command::validate:
      return run_validate(cfg, out, log);
  }
  return 1;
}

int exit_code_for_current_exception(std::ostream& log) {
  try {
    throw;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    log << "data error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    log << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const nlohmann::json::exception& e) {
    log << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    log << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    log << "numeric failure: " << e.what() << '\n';
    return 3;
  }
}

int main(int argc, char** argv) {
  CLI::App app{"Sharp bounds on causal effects under generalized marginal sensitivity models"};
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> output;
  app.add_option("command", command,
                 "bound, sweep, simulate, oracle or validate; overrides the config");
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--seed", seed, "root seed; overrides the config");
  app.add_option("--threads", threads, "worker threads; overrides the config");
  app.add_option("--output", output, "output path (default: standard output)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }

  try {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file '" + config_path + "'");
    json doc = json::parse(in);
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    if (!command.empty()) doc["command"] = command;
    if (seed) doc["seed"] = *seed;
    if (threads) doc["threads"] = *threads;
    if (output) doc["output"] = *output;
    const RunConfig cfg = parse_config(doc);

    std::ostringstream buffer;
    const int code = run(cfg, buffer, std::cerr);
    if (cfg.output.empty()) {
      std::cout << buffer.str();
    } else {
      std::ofstream file(cfg.output, std::ios::binary);
      if (!file) throw ConfigError("cannot write output file '" + cfg.output + "'");
      file << buffer.str();
    }
    return code;
  } catch (...) {
    return exit_code_for_current_exception(std::cerr);
  }
}

}  // namespace gmsm::cli
