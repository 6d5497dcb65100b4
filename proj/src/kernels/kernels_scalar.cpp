#include "diagode/kernels.hpp"

#include <algorithm>
#include <cmath>

// Reference kernels.  Complex products are written out in real arithmetic so
// the AVX2 variants can reproduce them operation for operation (mul, mul,
// sub/add; no FMA, no NaN fixups from the library complex multiply).

namespace diagode::kernels {
namespace {

void add_impl(const cd* a, const cd* b, cd* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_impl(const cd* a, const cd* b, cd* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

inline cd cmul(cd a, cd b) {
  const double ar = a.real(), ai = a.imag(), br = b.real(), bi = b.imag();
  return cd(ar * br - ai * bi, ar * bi + ai * br);
}

void scale_impl(cd alpha, const cd* a, cd* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = cmul(alpha, a[i]);
}

void axpy_impl(cd alpha, const cd* x, cd* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += cmul(alpha, x[i]);
}

void matmul_impl(const cd* a, const cd* b, cd* c, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    cd* row = c + i * n;
    std::fill(row, row + n, cd(0.0, 0.0));
    for (std::size_t k = 0; k < n; ++k) {
      const cd aik = a[i * n + k];
      const cd* brow = b + k * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += cmul(aik, brow[j]);
    }
  }
}

double sum_abs_impl(const cd* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double re = a[i].real(), im = a[i].imag();
    acc += std::sqrt(re * re + im * im);
  }
  return acc;
}

double max_abs_impl(const cd* a, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double re = a[i].real(), im = a[i].imag();
    m = std::max(m, re * re + im * im);
  }
  return std::sqrt(m);
}

double sum_sq_impl(const cd* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double re = a[i].real(), im = a[i].imag();
    acc += re * re + im * im;
  }
  return acc;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{add_impl,    sub_impl,     scale_impl,   axpy_impl,
                       matmul_impl, sum_abs_impl, max_abs_impl, sum_sq_impl};
  return ops;
}

}  // namespace diagode::kernels
