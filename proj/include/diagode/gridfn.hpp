#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "diagode/linalg.hpp"

namespace diagode {

// Uniform-grid sample of a function [0,1] -> scalars / vectors / matrices.
// Nodes t_j = j/N, N a power of two >= 16.  Derivative samples are optional;
// when present and flagged analytic they come from an exact formula rather
// than finite differences.
class GridFn {
 public:
  enum class Kind { scalar, vector, matrix };

  GridFn() = default;
  static GridFn zeros(Kind kind, int grid_n, int dim);
  static GridFn from_samples(Kind kind, int dim, std::vector<cd> values,
                             std::optional<std::vector<cd>> deriv = std::nullopt,
                             bool deriv_analytic = false);
  static GridFn sample_scalar(int grid_n, const std::function<cd(double)>& f,
                              const std::function<cd(double)>* df = nullptr);
  static GridFn sample_vector(int grid_n, int dim, const std::function<CVector(double)>& f);
  static GridFn sample_matrix(int grid_n, int dim, const std::function<CMatrix(double)>& f,
                              const std::function<CMatrix(double)>* df = nullptr);
  static GridFn constant_matrix(int grid_n, const CMatrix& m);

  Kind kind() const { return kind_; }
  int grid_n() const { return n_; }
  int node_count() const { return n_ + 1; }
  int dim() const { return dim_; }
  std::size_t stride() const { return stride_; }
  double t(int j) const { return static_cast<double>(j) / n_; }
  double h() const { return 1.0 / n_; }

  std::span<const cd> at(int j) const { return {values_.data() + stride_ * j, stride_}; }
  std::span<cd> at(int j) { return {values_.data() + stride_ * j, stride_}; }
  std::span<const cd> values() const { return values_; }
  std::span<cd> values() { return values_; }

  bool has_deriv() const { return deriv_.has_value(); }
  bool deriv_analytic() const { return deriv_analytic_; }
  std::span<const cd> deriv_at(int j) const;
  void set_deriv(std::vector<cd> deriv, bool analytic);

  cd scalar_at(int j) const;
  CVector vector_at(int j) const;
  CMatrix matrix_at(int j) const;
  void set_node(int j, const CMatrix& m);
  void set_node(int j, const CVector& v);

  // pointwise norm by kind: |.| / Euclidean / spectral
  double point_norm(int j) const;
  double point_deriv_norm(int j) const;

  GridFn& operator+=(const GridFn& o);
  GridFn& operator-=(const GridFn& o);
  GridFn& operator*=(cd a);

  bool same_shape(const GridFn& o) const {
    return kind_ == o.kind_ && n_ == o.n_ && dim_ == o.dim_;
  }

 private:
  Kind kind_ = Kind::scalar;
  int n_ = 0;
  int dim_ = 1;
  std::size_t stride_ = 1;
  std::vector<cd> values_;
  std::optional<std::vector<cd>> deriv_;
  bool deriv_analytic_ = false;
};

struct NormReport {
  double c_norm = 0.0;
  double l1_norm = 0.0;
  double w11_norm = 0.0;
  bool deriv_from_finite_differences = false;
};

double norm_c(const GridFn& f);
double norm_l1(const GridFn& f);
// L1 norm of f plus L1 norm of its derivative (stored samples preferred,
// central differences as fallback).
double norm_w11(const GridFn& f);
NormReport norm_report(const GridFn& f);

// Componentwise composite-trapezoid integral; result has stride() entries.
std::vector<cd> integrate(const GridFn& f);
cd integrate_scalar(const GridFn& f);

// Central differences, one-sided second order at the ends.
GridFn derivative(const GridFn& f);

// Convolution with a unit-mass hat kernel of the given width (samples
// reflected at the ends).  With vanish_at_ends the result is multiplied by a
// C^1 cutoff equal to 0 at t in {0,1} and 1 on [width, 1-width].  The output
// carries derivative samples of the smoothed function.
GridFn mollify(const GridFn& f, double width, bool vanish_at_ends);

GridFn matmul_nodes(const GridFn& a, const GridFn& b);
GridFn apply_nodes(const GridFn& a, const GridFn& x);  // matrix * vector
GridFn scaled(const GridFn& f, cd a);

}  // namespace diagode
