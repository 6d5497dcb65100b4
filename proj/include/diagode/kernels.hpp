#pragma once

#include <complex>
#include <cstddef>

namespace diagode::kernels {

using cd = std::complex<double>;

enum class Backend { scalar, avx2 };

// Flat complex-array primitives behind the grid and matrix layers.  Each op
// has a scalar reference implementation and an AVX2 variant selected at
// runtime.  Elementwise ops, matmul and max_abs are bit-identical across
// backends (same operation order, no FMA contraction); sum_abs and sum_sq may
// differ in the last bits because vector lanes accumulate independently.
struct Ops {
  void (*add)(const cd* a, const cd* b, cd* out, std::size_t n);
  void (*sub)(const cd* a, const cd* b, cd* out, std::size_t n);
  void (*scale)(cd alpha, const cd* a, cd* out, std::size_t n);
  void (*axpy)(cd alpha, const cd* x, cd* y, std::size_t n);
  // c = a * b, row-major n x n; c must not alias a or b.
  void (*matmul)(const cd* a, const cd* b, cd* c, std::size_t n);
  double (*sum_abs)(const cd* a, std::size_t n);
  double (*max_abs)(const cd* a, std::size_t n);
  double (*sum_sq)(const cd* a, std::size_t n);
};

bool backend_available(Backend b);
const Ops& ops(Backend b);

// Chosen at first use from cpuid, overridable with DIAGODE_SIMD=scalar|avx2.
const Ops& active();
Backend active_backend();
void force_backend(Backend b);

const char* backend_name(Backend b);

}  // namespace diagode::kernels
