#include <doctest.h>

#include <cstring>
#include <vector>

#include "diagode/instance_gen.hpp"
#include "diagode/kernels.hpp"

using namespace diagode;
namespace k = diagode::kernels;

namespace {

std::vector<cd> random_array(Rng& rng, std::size_t n) {
  std::vector<cd> v(n);
  for (cd& z : v) z = cd(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
  return v;
}

bool bits_equal(const std::vector<cd>& a, const std::vector<cd>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(cd)) == 0;
}

}  // namespace

TEST_CASE("kernel backends agree") {
  if (!k::backend_available(k::Backend::avx2)) {
    MESSAGE("AVX2 not available; scalar-only check");
    return;
  }
  const k::Ops& s = k::ops(k::Backend::scalar);
  const k::Ops& v = k::ops(k::Backend::avx2);
  Rng rng(7);
  for (std::size_t n : {1u, 2u, 3u, 5u, 8u, 9u, 64u, 257u}) {
    const std::vector<cd> a = random_array(rng, n);
    const std::vector<cd> b = random_array(rng, n);
    const cd alpha(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));

    std::vector<cd> r1(n), r2(n);
    s.add(a.data(), b.data(), r1.data(), n);
    v.add(a.data(), b.data(), r2.data(), n);
    CHECK(bits_equal(r1, r2));
    s.sub(a.data(), b.data(), r1.data(), n);
    v.sub(a.data(), b.data(), r2.data(), n);
    CHECK(bits_equal(r1, r2));
    s.scale(alpha, a.data(), r1.data(), n);
    v.scale(alpha, a.data(), r2.data(), n);
    CHECK(bits_equal(r1, r2));
    r1 = b;
    r2 = b;
    s.axpy(alpha, a.data(), r1.data(), n);
    v.axpy(alpha, a.data(), r2.data(), n);
    CHECK(bits_equal(r1, r2));

    CHECK(s.max_abs(a.data(), n) == v.max_abs(a.data(), n));
    CHECK(s.sum_abs(a.data(), n) == doctest::Approx(v.sum_abs(a.data(), n)).epsilon(1e-13));
    CHECK(s.sum_sq(a.data(), n) == doctest::Approx(v.sum_sq(a.data(), n)).epsilon(1e-13));
  }
  for (std::size_t dim : {1u, 2u, 3u, 4u, 7u, 8u}) {
    const std::vector<cd> a = random_array(rng, dim * dim);
    const std::vector<cd> b = random_array(rng, dim * dim);
    std::vector<cd> c1(dim * dim), c2(dim * dim);
    s.matmul(a.data(), b.data(), c1.data(), dim);
    v.matmul(a.data(), b.data(), c2.data(), dim);
    CHECK(bits_equal(c1, c2));
  }
}

TEST_CASE("kernel dispatch override") {
  const k::Backend initial = k::active_backend();
  k::force_backend(k::Backend::scalar);
  CHECK(k::active_backend() == k::Backend::scalar);
  if (k::backend_available(k::Backend::avx2)) {
    k::force_backend(k::Backend::avx2);
    CHECK(k::active_backend() == k::Backend::avx2);
  }
  k::force_backend(initial);
}
