#pragma once

#include "diagode/bvp.hpp"
#include "diagode/frame.hpp"

namespace diagode {

enum class Side { left, right };

// Family A_nu = sum_l d_nu h_l P_l + V with d_nu = magnitude * direction.
// Blocks are the index sets of the complete orthoprojector system P_1..P_m;
// profiles are fixed per family (the parameter enters only through d_nu).
struct ParamFamily {
  int dim = 0;
  std::vector<std::vector<int>> blocks;  // 0-based index sets
  std::vector<GridFn> h;                 // scalar profiles
  GridFn v;                              // matrix perturbation
  cd direction{1.0, 0.0};
  std::vector<double> magnitudes;

  int block_count() const { return static_cast<int>(blocks.size()); }
  cd d(int nu) const { return direction * magnitudes[static_cast<std::size_t>(nu)]; }
  void validate() const;
};

GridFn assemble(const ParamFamily& fam, int nu);
// Assembly with every off-block part of V removed.
GridFn diagonal_model(const ParamFamily& fam, int nu);

struct PairCondition {
  int nu = 0;
  int k = 0, l = 0;  // block pair, k < l
  double min_gap = 0.0;
  double worst = 0.0;
  bool separation_ok = false;
  bool dichotomy_ok = false;
};

struct ConditionsReport {
  std::vector<PairCondition> pairs;
  double min_separation = 0.0;
  double worst = 0.0;
  bool ok() const;
};

// Profile separation (>= 1 everywhere) and the subinterval dichotomy sums
// Re d_nu (h_k - h_l) <= -ln gamma for k < l.
ConditionsReport check_conditions(const ParamFamily& fam, double gamma);

// Reorders blocks so that Re(d h) is ascending at the first node; needed when
// a family is labeled without regard to the sweep direction.
ParamFamily sort_blocks_by_direction(const ParamFamily& fam);

struct FrameBudget {
  double w_v = 1.0 / 64;  // mollification width for V
  double w_h = 1.0 / 64;  // mollification width for profiles lacking derivatives
  double width_floor = 1.0 / 1024;
  double sep_target = 0.5;  // required post-smoothing profile separation
};

struct IndexFrame {
  PiFrame frame;
  GridFn shifted;        // A_nu - d h_k
  double min_magnitude;  // smallest magnitude satisfying the smallness bound
  bool smallness_ok;
  double epsilon_v;  // ||V - C||_L1
  double alpha;      // ||C'||_L1
  double beta;       // max_l ||g_l'||_L1
};

// Frame for the k-th block: zero block P_k, minus = union of lower blocks,
// plus = union of higher blocks; atoms d (g_l - g_k) P_l with C a smoothed
// copy of V vanishing at the endpoints.
IndexFrame build_frame_for_index(const ParamFamily& fam, int nu, int k, const FrameBudget& budget = {},
                                 bool permissive = false);

struct SolveOptions {
  int contour_points = 64;
  double tol = 1e-10;
  int max_iters = 200;
  int threads = 1;
  bool use_transformer = true;  // conjugate by the frame transformer before iterating
  double theta_limit = 0.97;    // largest admissible contraction estimate
  FrameBudget budget{};
};

// Bounded samples plus a nodewise complex log factor; the actual solution is
// exp(log_factor[j]) * y(t_j).
struct ScaledSolution {
  GridFn y;
  std::vector<cd> log_factor;
  GridFn materialize() const;  // fails if the scale exceeds double range
  double norm_c_actual() const;
  double point_norm_actual(int j) const;
};

// One boundary problem of a structured system, solved in shifted coordinates
// through the block-diagonal Green kernel (with an optional transformer
// conjugation), plus the matching diagonal-model solution.
struct StructuredProblem {
  int dim = 0;
  std::vector<std::vector<int>> blocks;
  std::vector<GridFn> h;
  GridFn v;  // A - sum d h_l P_l
  cd d{};
  int k = 0;
  Side side = Side::left;
  CVector xi;
};

struct StructuredResult {
  ScaledSolution full;
  ScaledSolution model;
  double rel_sup_error = 0.0;
  double gamma = 0.0;
  double theta = 0.0;
  double r_l1 = 0.0;             // L1 norm of the iterated perturbation
  double transformed_l1 = 0.0;   // ||S^-1 A S - S^-1 S' - coarse block-diagonal||_L1
  bool transformer_used = false;
  int iterations = 0;
};

StructuredResult solve_structured(const StructuredProblem& prob, const SolveOptions& opts = {});

struct CompareResult {
  GridFn x_full;   // actual scale
  GridFn x_model;  // actual scale
  double rel_sup_error = 0.0;
  StructuredResult stats;
};

CompareResult asymptotic_compare(const ParamFamily& fam, int nu, int k, const CVector& xi, Side side,
                                 const SolveOptions& opts = {});

struct RefineResult {
  GridFn y;  // actual scale
  double y_norm_c = 0.0;
  double actual_gap = 0.0;
  double refined_bound = 0.0;
  double epsilon_used = 0.0;
  double gamma = 0.0;
};

// Correction problem y' = A_0 y + (A - A_0) x_0 with homogeneous boundary
// data; returns the measured gap against the bracket bound.
RefineResult refine(const ParamFamily& fam, int nu, int k, const CVector& xi,
                    const SolveOptions& opts = {});

}  // namespace diagode
