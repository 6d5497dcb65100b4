#pragma once

#include <map>

#include "diagode/asympt.hpp"
#include "diagode/expr.hpp"

namespace diagode {

// n-th order companion-type system: superdiagonal p_k, lower band -q_kl, and
// the spectral parameter entering the corner entry (lambda + zeta)^n p_n.
struct CompanionSpec {
  int n = 2;
  cd zeta{0.0, 0.0};
  std::vector<Expr> p;                       // p_1..p_n, positive on [0,1]
  std::map<std::pair<int, int>, Expr> q;     // 1-based (k,l), 1 <= l <= k <= n
  int grid_n = 1024;
};

struct SampledCompanion {
  int n = 0;
  cd zeta{};
  int grid_n = 0;
  std::vector<GridFn> p;                // scalar, analytic derivatives
  std::vector<std::vector<GridFn>> q;   // q[k-1][l-1] for l <= k (zero functions when absent)
  GridFn rho;                           // (prod p_m)^{1/n}, positive root
  GridFn qdiag_sum;                     // sum_l q_ll
};

SampledCompanion sample_companion(const CompanionSpec& spec);

GridFn build_D(const SampledCompanion& sc, cd lambda);
GridFn build_D0(const SampledCompanion& sc, cd lambda);
GridFn amplitude_profile(const SampledCompanion& sc);  // rho

// Exact Vandermonde-type diagonalization of the leading part:
// S^{-1} D0 S = A with A_kk = lambda rho e^{2 pi k i / n}.
std::pair<GridFn, GridFn> build_S_lambda(const SampledCompanion& sc, cd lambda);
GridFn build_A_lambda(const SampledCompanion& sc, cd lambda);

// Diagonal entries of S^{-1} S' (independent of lambda and of the row):
// sum_m (2m - n - 1)/(2n) * d ln p_m / dt.
GridFn diag_correction(const SampledCompanion& sc);

struct GfMatrices {
  CMatrix g;               // G_kl = e^{2 pi k i / n}
  std::vector<CMatrix> f;  // (F_m)_kl = n^{-1} e^{2 pi (l-k)(m-1) i / n}
};
GfMatrices gf_matrices(int n);

// L1 norm of S^{-1} (D - D0) S - zeta rho G + sum_m q_mm F_m; decays like
// 1/|lambda| along rays.
double residual_check(const SampledCompanion& sc, cd lambda);

struct SectorContext {
  int n = 0;
  int m = 0;                // 1..2n
  std::vector<int> tau;     // 1-based mode index per ascending-Re position
  double midpoint_arg = 0;  // (2m-1) pi / (2n)
};

// Permutation ordering the directions e^{2 pi k i / n} by ascending real part
// along the sector midpoint ray.
SectorContext sector_permutation(int n, int m);
bool lambda_in_sector(cd lambda, int n, int m);

struct BirkhoffSolution {
  GridFn y;               // leading asymptotic term, y-coordinates
  GridFn x;               // S_lambda * y
  GridFn amplitude;       // prod p_l^{(n-2l+1)/(2n)}
  std::vector<cd> phase;  // cumulative exponent at the nodes
};

BirkhoffSolution birkhoff_solution(const SampledCompanion& sc, cd lambda, int k,
                                   const SectorContext& sec);

// y' = [S^{-1} D S - S^{-1} S'] y with S' by central differences.
GridFn transformed_coefficient(const SampledCompanion& sc, cd lambda);

// The transformed system as a structured block problem along the sector's
// ordering; profiles are rescaled so pairwise separation is at least one.
StructuredProblem companion_structured_problem(const SampledCompanion& sc, cd lambda,
                                               const SectorContext& sec, int k, Side side);

struct DecayRow {
  double magnitude = 0.0;
  double rel_sup_error = 0.0;   // direct vs Birkhoff, normalized at the pinned end
  double residual_l1 = 0.0;
  double scaled_residual = 0.0;  // magnitude * residual_l1
};

std::vector<DecayRow> verify_asymptotics(const SampledCompanion& sc, const SectorContext& sec,
                                         const std::vector<double>& magnitudes, int k, Side side,
                                         const SolveOptions& opts = {});

}  // namespace diagode
