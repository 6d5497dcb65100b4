#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace diagode {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double measured = 0.0;   // worst badness: value normalized by its limit
  double threshold = 1.0;  // pass iff measured <= threshold
  double seconds = 0.0;    // not serialized (timing is not reproducible)
};

struct SelftestConfig {
  std::uint64_t seed = 12345;
  int frame_trials = 100;
  int pair_trials = 50;
  int contraction_trials = 50;
  int dichotomy_trials = 20;
  int liouville_trials = 20;
  int frame_grid = 512;
  int grid_n = 1024;
  int threads = 1;
};

std::vector<CriterionResult> run_selftest(const SelftestConfig& cfg);
std::string selftest_csv(const std::vector<CriterionResult>& results);

}  // namespace diagode
