#include "diagode/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "diagode/errors.hpp"

namespace diagode::kernels {

const Ops& scalar_ops();
#ifdef DIAGODE_AVX2_BUILD
const Ops& avx2_ops();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(DIAGODE_AVX2_BUILD) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend pick_default() {
  if (const char* env = std::getenv("DIAGODE_SIMD")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0) {
      if (!backend_available(Backend::avx2))
        fail(ErrorKind::config_error, "DIAGODE_SIMD=avx2 requested but AVX2 is unavailable");
      return Backend::avx2;
    }
    fail(ErrorKind::config_error, std::string("unknown DIAGODE_SIMD value: ") + env);
  }
  return backend_available(Backend::avx2) ? Backend::avx2 : Backend::scalar;
}

std::atomic<int> g_backend{-1};

Backend current() {
  int b = g_backend.load(std::memory_order_acquire);
  if (b < 0) {
    b = static_cast<int>(pick_default());
    g_backend.store(b, std::memory_order_release);
  }
  return static_cast<Backend>(b);
}

}  // namespace

bool backend_available(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
      return cpu_has_avx2();
  }
  return false;
}

const Ops& ops(Backend b) {
#ifdef DIAGODE_AVX2_BUILD
  if (b == Backend::avx2) {
    if (!backend_available(Backend::avx2))
      fail(ErrorKind::invalid_input, "AVX2 backend not available on this CPU");
    return avx2_ops();
  }
#else
  if (b == Backend::avx2) fail(ErrorKind::invalid_input, "AVX2 backend not compiled in");
#endif
  return scalar_ops();
}

const Ops& active() { return ops(current()); }

Backend active_backend() { return current(); }

void force_backend(Backend b) {
  if (!backend_available(b)) fail(ErrorKind::invalid_input, "requested kernel backend not available");
  g_backend.store(static_cast<int>(b), std::memory_order_release);
}

const char* backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

}  // namespace diagode::kernels
