#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diagode/asympt.hpp"
#include "diagode/companion.hpp"

namespace diagode {

// Parsed run configuration (JSON file with nested blocks; coefficient values
// are expression strings in t).
struct RunConfig {
  int grid_n = 1024;
  int contour_points = 64;
  double slack = 0.05;
  double tolerance = 1e-10;
  std::uint64_t seed = 0;
  std::vector<double> magnitudes;
  int sector = 1;
  int k = 1;              // 1-based block / mode index
  std::string side = "left";  // left | right | both
  std::string json_text;  // raw text, reparsed by the command runners
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

struct CommandOutput {
  std::string file_name;
  std::string csv;
};

// Commands: bvp | frame | family | companion | selftest.
std::vector<CommandOutput> run_command(const std::string& command, const RunConfig& cfg, int threads,
                                       bool strict);

void write_outputs(const std::vector<CommandOutput>& outs, const std::string& out_dir);

// Full command-line entry: <tool> <command> --config <path> [--out <dir>]
// [--threads K] [--strict].  Exit codes: 0 ok, 2 config error, 3 numeric
// precondition failure, 4 bound violation in strict mode.
int run_cli(const std::vector<std::string>& args);

}  // namespace diagode
