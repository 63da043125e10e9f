#pragma once

#include <iosfwd>
#include <string>

#include "gmsm/config.hpp"
#include "gmsm/estimate.hpp"

namespace gmsm::cli {

// Full command-line entry point; returns the process exit code
// (0 ok, 1 config error, 2 data error, 3 numeric failure).
int main(int argc, char** argv);

// Runs a parsed config. The result goes to `out`, warnings and summaries
// to `log`. Returns the exit code; errors propagate as exceptions.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& log);

// Exit code for the exception currently being handled.
int exit_code_for_current_exception(std::ostream& log);

// Header row required; columns are picked by role.
ObservedData read_csv(std::istream& in, const ColumnRoles& roles, TreatmentKind kind);

// Loads the CSV or draws the synthetic sample named in the config.
ObservedData load_data(const RunConfig& cfg);

// Shortest decimal text that reads back to the same double.
std::string format_number(double v);

// Percentile with linear interpolation between order statistics.
double percentile(std::vector<double> values, double p);

}  // namespace gmsm::cli
