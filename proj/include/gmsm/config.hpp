#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gmsm/bounds.hpp"
#include "gmsm/estimate.hpp"
#include "gmsm/synth.hpp"

namespace gmsm {

enum class Command { bound, sweep, simulate, oracle, validate };

struct ColumnRoles {
  std::vector<std::string> x;
  std::string a;
  std::vector<std::string> mediators;
  std::string y;
};

// Either a CSV file with declared column roles or a synthetic SCM draw.
struct DataSource {
  std::optional<std::string> csv;
  ColumnRoles columns;
  TreatmentKind treatment = TreatmentKind::discrete;
  std::optional<ScmConfig> scm;
  std::size_t n = 0;
  bool include_hidden = false;
};

struct QuerySpec {
  std::vector<std::vector<double>> x;
  std::vector<double> treatments;
  Functional functional;
  std::optional<std::vector<double>> contrast;
  bool average = false;

  // Node labels M1..Ml implied by the treatment count.
  std::vector<std::string> mediators() const;
  CausalQuery at(std::size_t i, const std::vector<double>& treatments) const;
};

struct SweepSpec {
  std::string node;
  std::vector<double> gammas;
};

struct ValidateSpec {
  std::vector<std::pair<std::string, TreatmentKind>> settings;
  std::size_t n = 50000;
  int grid_points = 21;
  double delta = 0.05;
  double gamma_margin = 1.05;
  std::size_t n_mc = 1'000'000;
};

struct RunConfig {
  Command command = Command::bound;
  std::optional<DataSource> data;
  FitConfig fit;
  SensitivitySpec sensitivity;
  std::optional<QuerySpec> query;
  std::optional<SweepSpec> sweep;
  ValidateSpec validate;
  std::size_t oracle_n_mc = 1'000'000;
  std::size_t k = 10000;
  std::size_t bootstrap = 0;  // replicates; 0 is off
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string output;

  // Input with every default filled in. Threads and output path are kept
  // out of it because they do not change results.
  nlohmann::json resolved;
  std::string hash;
};

// Strict parse: unknown keys, wrong types and out-of-range values raise
// ConfigError.
RunConfig parse_config(const nlohmann::json& doc);

std::string command_name(Command c);
std::string treatment_name(TreatmentKind k);

// 16 hex digits of the FNV-1a hash of the compact dump.
std::string config_hash(const nlohmann::json& resolved);

}  // namespace gmsm
