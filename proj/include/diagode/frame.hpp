#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "diagode/gridfn.hpp"

namespace diagode {

// Ordered triple of coordinate orthoprojectors (zero / minus / plus) given by
// disjoint index sets covering {0..dim-1}.  Minus or plus may be empty.
class Partition {
 public:
  Partition(int dim, std::vector<int> zero, std::vector<int> minus, std::vector<int> plus);

  int dim() const { return dim_; }
  const std::vector<int>& block(int b) const { return blocks_[static_cast<std::size_t>(b)]; }
  int block_of(int index) const { return membership_[static_cast<std::size_t>(index)]; }
  CMatrix projector(int b) const;
  bool degenerate() const { return blocks_[1].empty() || blocks_[2].empty(); }

  // Block-diagonal compression P0 A P0 + P- A P- + P+ A P+.
  CMatrix delta(const CMatrix& a) const;
  GridFn delta(const GridFn& a) const;

 private:
  int dim_;
  std::array<std::vector<int>, 3> blocks_;
  std::vector<int> membership_;
};

// One spectral atom: scalar profile times the orthoprojector onto `indices`.
struct SpectralAtom {
  GridFn beta;               // scalar profile; analytic derivative expected
  std::vector<int> indices;  // subset of a single partition block
  int block;                 // 0 zero, 1 minus, 2 plus
};

// B(t) = sum of beta_a(t) * P_a; diagonal, normal, commuting with the
// partition by construction.
class SpectralAtoms {
 public:
  SpectralAtoms(int dim, std::vector<SpectralAtom> atoms, const Partition& part);

  int dim() const { return dim_; }
  int grid_n() const { return grid_n_; }
  const std::vector<SpectralAtom>& atoms() const { return atoms_; }
  cd diag_entry(int index, int j) const;
  CMatrix value_at(int j) const;
  double deriv_norm_at(int j) const;  // ||B'(t_j)|| = max |beta_a'|
  GridFn to_gridfn() const;

 private:
  int dim_;
  int grid_n_;
  std::vector<SpectralAtom> atoms_;
  std::vector<int> atom_of_index_;
};

struct GapResult {
  double d_pi = 0.0;    // +inf when no cross-block pair exists
  double d_atom = 0.0;  // +inf when there is a single atom
  bool single_atom = false;
};
GapResult gap(const SpectralAtoms& b, const Partition& part);

// Frame {B, C}: smooth normal diagonal part plus a small perturbation
// vanishing at the endpoints.  Smallness: norm_c(C) < d_atom / (8 dim).
struct PiFrame {
  Partition partition;
  SpectralAtoms b;
  GridFn c;
  double d_pi = 0.0;
  double d_atom = 0.0;
  bool smallness_ok = false;

  // enforce_smallness=false keeps going when only the smallness inequality
  // fails (contours must still clear the spectrum).
  static PiFrame make(Partition partition, SpectralAtoms b, GridFn c, bool enforce_smallness = true);
  double effective_gap() const;
  double smallness_bound() const;
};

struct RieszOptions {
  int contour_points = 64;
};

// Contour-integral projectors of B+C over one circle of radius d_atom/2 per
// atom, grouped by partition block.
std::array<CMatrix, 3> riesz_projectors(const PiFrame& f, int t_index, const RieszOptions& opts = {});

struct EqBound {
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = true;
};

struct BoundReport {
  EqBound transformer_dev;  // ||S(t)-1||      <= (4 dim / d) ||C(t)||
  EqBound inverse_dev;      // ||S^{-1}(t)-1|| <= (8 dim / d) ||C(t)||
  EqBound sdot_l1;          // ||S'||_L1       <= (4 dim / d^2) kappa
  EqBound conjugation;      // ||S^{-1}(B+C)S - block-diag|| <= (8 dim / d) ||C(t)||^2
  double kappa = 0.0;
  double d_used = 0.0;
  double slack = 0.05;
  double q_sum_dev = 0.0;  // max over nodes ||Q0+Q-+Q+ - 1||
  double s_end_dev = 0.0;  // max(||S(0)-1||, ||S(1)-1||)
  bool all_ok() const {
    return transformer_dev.ok && inverse_dev.ok && sdot_l1.ok && conjugation.ok;
  }
};

struct TransformerBundle {
  GridFn s;
  GridFn s_inv;
  BoundReport report;
};

struct TransformerOptions {
  int contour_points = 64;
  double slack = 0.05;
  bool strict = false;  // bound violations throw instead of being reported
  int threads = 1;
};

TransformerBundle build_transformer(const PiFrame& f, const TransformerOptions& opts = {});

// integral of 6 ||C|| ||B'|| + (4 ||C|| + d) ||C'||
double kappa(const PiFrame& f);

// Coefficient and forcing of the substituted equation: S^{-1} A S - S^{-1} S'
// and S^{-1} f.  S' by central differences on the grid.
std::pair<GridFn, std::optional<GridFn>> conjugate(const GridFn& s, const GridFn& s_inv,
                                                   const GridFn& a, const GridFn* f = nullptr);
std::pair<GridFn, std::optional<GridFn>> conjugate(const TransformerBundle& bundle, const GridFn& a,
                                                   const GridFn* f = nullptr);

struct ConjugationEstimate {
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = true;
};

// ||S^{-1} A S - block-diag(A)||_L1 against
// 3 ||A - block-diag(A)||_L1 + (16 dim / d) integral ||C|| ||block-diag(A)||.
ConjugationEstimate conjugation_estimate(const PiFrame& f, const TransformerBundle& bundle,
                                         const GridFn& a, double slack = 0.05);

}  // namespace diagode
