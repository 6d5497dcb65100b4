#include "diagode/kernels.hpp"

#ifdef DIAGODE_AVX2_BUILD

#include <immintrin.h>

#include <algorithm>
#include <cmath>

// AVX2 kernels.  A __m256d holds two interleaved complex doubles
// [re0 im0 re1 im1].  Complex products use mul/mul/addsub, matching the
// scalar reference (re' = ar*xr - ai*xi, im' = ar*xi + ai*xr) bit for bit.

namespace diagode::kernels {
namespace {

inline const double* dp(const cd* p) { return reinterpret_cast<const double*>(p); }
inline double* dp(cd* p) { return reinterpret_cast<double*>(p); }

inline cd cmul1(cd a, cd b) {
  const double ar = a.real(), ai = a.imag(), br = b.real(), bi = b.imag();
  return cd(ar * br - ai * bi, ar * bi + ai * br);
}

// (ar + i*ai) * x for both complex lanes of x.
inline __m256d cmul_bcast(__m256d ar, __m256d ai, __m256d x) {
  const __m256d t1 = _mm256_mul_pd(ar, x);
  const __m256d xs = _mm256_permute_pd(x, 0b0101);
  const __m256d t2 = _mm256_mul_pd(ai, xs);
  return _mm256_addsub_pd(t1, t2);
}

void add_impl(const cd* a, const cd* b, cd* out, std::size_t n) {
  const std::size_t nd = 2 * n;
  std::size_t i = 0;
  for (; i + 4 <= nd; i += 4)
    _mm256_storeu_pd(dp(out) + i, _mm256_add_pd(_mm256_loadu_pd(dp(a) + i), _mm256_loadu_pd(dp(b) + i)));
  for (; i < nd; ++i) dp(out)[i] = dp(a)[i] + dp(b)[i];
}

void sub_impl(const cd* a, const cd* b, cd* out, std::size_t n) {
  const std::size_t nd = 2 * n;
  std::size_t i = 0;
  for (; i + 4 <= nd; i += 4)
    _mm256_storeu_pd(dp(out) + i, _mm256_sub_pd(_mm256_loadu_pd(dp(a) + i), _mm256_loadu_pd(dp(b) + i)));
  for (; i < nd; ++i) dp(out)[i] = dp(a)[i] - dp(b)[i];
}

void scale_impl(cd alpha, const cd* a, cd* out, std::size_t n) {
  const __m256d ar = _mm256_set1_pd(alpha.real());
  const __m256d ai = _mm256_set1_pd(alpha.imag());
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    _mm256_storeu_pd(dp(out) + 2 * i, cmul_bcast(ar, ai, _mm256_loadu_pd(dp(a) + 2 * i)));
  for (; i < n; ++i) out[i] = cmul1(alpha, a[i]);
}

void axpy_impl(cd alpha, const cd* x, cd* y, std::size_t n) {
  const __m256d ar = _mm256_set1_pd(alpha.real());
  const __m256d ai = _mm256_set1_pd(alpha.imag());
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d acc = _mm256_add_pd(_mm256_loadu_pd(dp(y) + 2 * i),
                                      cmul_bcast(ar, ai, _mm256_loadu_pd(dp(x) + 2 * i)));
    _mm256_storeu_pd(dp(y) + 2 * i, acc);
  }
  for (; i < n; ++i) y[i] += cmul1(alpha, x[i]);
}

void matmul_impl(const cd* a, const cd* b, cd* c, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    cd* row = c + i * n;
    std::fill(row, row + n, cd(0.0, 0.0));
    for (std::size_t k = 0; k < n; ++k) {
      const cd aik = a[i * n + k];
      const __m256d ar = _mm256_set1_pd(aik.real());
      const __m256d ai = _mm256_set1_pd(aik.imag());
      const cd* brow = b + k * n;
      std::size_t j = 0;
      for (; j + 2 <= n; j += 2) {
        const __m256d acc = _mm256_add_pd(_mm256_loadu_pd(dp(row) + 2 * j),
                                          cmul_bcast(ar, ai, _mm256_loadu_pd(dp(brow) + 2 * j)));
        _mm256_storeu_pd(dp(row) + 2 * j, acc);
      }
      for (; j < n; ++j) row[j] += cmul1(aik, brow[j]);
    }
  }
}

// |z0|^2,|z2|^2,|z1|^2,|z3|^2 for four consecutive complex values; the lane
// permutation is harmless for the sum/max reductions below.
inline __m256d abs2x4(const double* p) {
  const __m256d x = _mm256_loadu_pd(p);
  const __m256d y = _mm256_loadu_pd(p + 4);
  return _mm256_hadd_pd(_mm256_mul_pd(x, x), _mm256_mul_pd(y, y));
}

double sum_abs_impl(const cd* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_sqrt_pd(abs2x4(dp(a) + 2 * i)));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) {
    const double re = a[i].real(), im = a[i].imag();
    s += std::sqrt(re * re + im * im);
  }
  return s;
}

double max_abs_impl(const cd* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, abs2x4(dp(a) + 2 * i));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double m = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
  for (; i < n; ++i) {
    const double re = a[i].real(), im = a[i].imag();
    m = std::max(m, re * re + im * im);
  }
  return std::sqrt(m);
}

double sum_sq_impl(const cd* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, abs2x4(dp(a) + 2 * i));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) {
    const double re = a[i].real(), im = a[i].imag();
    s += re * re + im * im;
  }
  return s;
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops ops{add_impl,    sub_impl,     scale_impl,   axpy_impl,
                       matmul_impl, sum_abs_impl, max_abs_impl, sum_sq_impl};
  return ops;
}

}  // namespace diagode::kernels

#endif  // DIAGODE_AVX2_BUILD
