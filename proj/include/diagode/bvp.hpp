#pragma once

#include "diagode/gridfn.hpp"

namespace diagode {

// Two-point problem  x' = A x + f,  P x(0) + (1-P) x(1) = xi.
struct BvpProblem {
  GridFn a;   // matrix coefficient
  GridFn f;   // vector forcing
  CMatrix p;  // boundary orthoprojector
  CVector xi;
};

void require_orthoprojector(const CMatrix& p);

// Solution of M' = A M, M(0) = 1 by classical fourth-order steps with
// uniform substepping (at least 4 per grid interval, and small enough that
// substep * norm_c(A) stays below 0.025).
GridFn fundamental_matrix(const GridFn& a);

struct DichotomyResult {
  bool holds = false;
  double worst = 0.0;  // max over [a,b] of integral of omega((2P-1)A)
};

// max over subintervals [a,b] of integral_a^b omega((2P-1)A)
double dichotomy_worst(const GridFn& a, const CMatrix& p);

// Checks integral_a^b omega((2P-1)A) <= -ln(gamma) over every subinterval by
// a running-extremum scan of the cumulative integral.
DichotomyResult check_dichotomy(const GridFn& a, const CMatrix& p, double gamma);

// Oracle solve through the fundamental matrix.  Only trustworthy while
// norm_c(A) stays moderate; the asymptotic sweeps use the structured solver
// instead.
GridFn solve_direct(const BvpProblem& prob);

// [P - theta(s-t)] M(t) M(s)^{-1} with theta(0) = 0.
CMatrix green_kernel(const GridFn& m, const CMatrix& p, int t_idx, int s_idx);

struct ContractionParams {
  double gamma = 0.5;
  double theta = 0.5;
  int max_iters = 200;
  double tol = 1e-10;
};

struct ContractionResult {
  GridFn x;
  GridFn x0;  // solution of the unperturbed problem
  int iterations = 0;
  double contraction_factor = 0.0;  // largest measured step ratio
};

// Picard iteration for x' = (A+V)x + f under the dichotomy condition;
// requires A to commute with P and ||V||_L1 <= theta * gamma.
ContractionResult solve_contraction(const GridFn& a, const GridFn& v, const GridFn& f,
                                    const CMatrix& p, const CVector& xi,
                                    const ContractionParams& params);

double norm_c_vec(const GridFn& x);

}  // namespace diagode
