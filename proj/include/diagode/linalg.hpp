#pragma once

#include <complex>
#include <initializer_list>
#include <span>
#include <vector>

#include "diagode/errors.hpp"

namespace diagode {

using cd = std::complex<double>;

class CVector {
 public:
  CVector() = default;
  explicit CVector(int dim) : v_(static_cast<std::size_t>(check_dim(dim))) {}
  CVector(std::initializer_list<cd> init) : v_(init) { check_dim(static_cast<int>(v_.size())); }
  static CVector unit(int dim, int k);

  int dim() const { return static_cast<int>(v_.size()); }
  cd& operator[](int i) { return v_[static_cast<std::size_t>(i)]; }
  const cd& operator[](int i) const { return v_[static_cast<std::size_t>(i)]; }
  std::span<cd> data() { return v_; }
  std::span<const cd> data() const { return v_; }

  double norm() const;  // Euclidean
  CVector& operator+=(const CVector& o);
  CVector& operator-=(const CVector& o);
  CVector& operator*=(cd a);

 private:
  static int check_dim(int dim);
  std::vector<cd> v_;
};

// Square complex matrix, row-major.  Dimensions in this library stay small
// (<= 16); everything is dense.
class CMatrix {
 public:
  CMatrix() = default;
  explicit CMatrix(int dim) : n_(check_dim(dim)), a_(static_cast<std::size_t>(n_) * n_) {}
  CMatrix(int dim, std::initializer_list<cd> rowmajor);
  static CMatrix identity(int dim);
  static CMatrix diagonal(std::initializer_list<cd> d);

  int dim() const { return n_; }
  cd& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * n_ + j]; }
  const cd& operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * n_ + j]; }
  std::span<cd> data() { return a_; }
  std::span<const cd> data() const { return a_; }

  CMatrix adjoint() const;
  CMatrix& operator+=(const CMatrix& o);
  CMatrix& operator-=(const CMatrix& o);
  CMatrix& operator*=(cd a);
  friend CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
  friend CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
  friend CMatrix operator*(cd a, CMatrix m) { return m *= a; }
  friend CMatrix operator*(const CMatrix& a, const CMatrix& b);
  CVector apply(const CVector& x) const;

 private:
  static int check_dim(int dim);
  int n_ = 0;
  std::vector<cd> a_;
};

bool all_finite(std::span<const cd> v);
void require_finite(std::span<const cd> v, const char* what);
double max_entry_abs(const CMatrix& a);
double frobenius(const CMatrix& a);

// Spectral norm (largest singular value), via the Hermitian eigensolver on
// A^H A.
double op_norm(const CMatrix& a);

// Right bound of the numerical range: largest eigenvalue of (A + A^H)/2.
double omega(const CMatrix& a);

cd trace(const CMatrix& a);

// Eigenvalues of a Hermitian matrix, ascending.  Input is checked to be
// Hermitian within 1e-12 (relative to the entry scale).
std::vector<double> herm_eigs(const CMatrix& h);

struct HermEig {
  std::vector<double> values;  // ascending
  CMatrix vectors;             // columns
};
HermEig herm_eig_full(const CMatrix& h);

// Row-pivoted LU, reusable across right-hand sides.
class Lu {
 public:
  explicit Lu(const CMatrix& a, double rel_tol = 1e-13);
  bool singular() const { return singular_; }
  cd det() const;
  CVector solve(const CVector& b) const;
  CMatrix solve(const CMatrix& b) const;
  CMatrix inverse() const;
  int dim() const { return n_; }

 private:
  void solve_in_place(std::span<cd> x) const;
  int n_ = 0;
  std::vector<cd> lu_;
  std::vector<int> piv_;
  int sign_ = 1;
  bool singular_ = false;
};

CVector solve_linear(const CMatrix& a, const CVector& b);
CMatrix solve_linear(const CMatrix& a, const CMatrix& b);
CMatrix inverse(const CMatrix& a);
cd det(const CMatrix& a);

}  // namespace diagode
