#pragma once

#include <cstdint>
#include <random>

#include "diagode/asympt.hpp"
#include "diagode/frame.hpp"

namespace diagode {

// Deterministic generator with explicit value mappings (library distributions
// are not pinned across implementations; raw engine output is).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(eng_() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  cd unit_complex() { return std::polar(1.0, uniform(0.0, 2.0 * 3.14159265358979323846)); }

 private:
  std::mt19937_64 eng_;
};

// base + amp * sin(2 pi freq t + phase), analytic derivative
GridFn random_profile(Rng& rng, int grid_n, cd base, double amp);

// smooth trigonometric matrix entries scaled to a target sup norm; with
// vanish_at_ends every entry is built from sin(2 pi f t) and 1 - cos(2 pi f t)
GridFn random_smooth_matrix(Rng& rng, int grid_n, int dim, double target_c_norm, bool vanish_at_ends);

GridFn random_smooth_vector(Rng& rng, int grid_n, int dim, double scale);

// Random frame: dim 2..max_dim, atoms separated by at least ~1.1, and the
// perturbation scaled to c_scale times the smallness bound.
PiFrame random_frame(Rng& rng, int grid_n, int max_dim, double c_scale);

struct AdmissibleBvp {
  GridFn a;
  GridFn v;
  GridFn f;
  CMatrix p;
  CVector xi;
  double gamma = 0.5;
  double theta = 0.5;
};

// A commutes with the random coordinate projector and satisfies the
// dichotomy with margin; V is scaled to 0.9 * theta * gamma in L1.
AdmissibleBvp random_admissible_bvp(Rng& rng, int grid_n, int max_dim);

// Two-block family with smooth complex coupling, unit-separated profiles and
// perturbation sup norm about 0.4; used by sweeps and property tests.
ParamFamily demo_family(int grid_n, std::vector<double> magnitudes);

}  // namespace diagode
