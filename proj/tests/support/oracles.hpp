#pragma once

// Test-only oracles, kept independent of the library's solver paths:
// Durand-Kerner polynomial roots, Faddeev-LeVerrier characteristic
// polynomials, a Monte-Carlo + power-iteration numerical-range bound, and a
// brute-force subinterval scan.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "diagode/instance_gen.hpp"
#include "diagode/linalg.hpp"

namespace oracles {

using diagode::cd;
using diagode::CMatrix;
using diagode::CVector;

// coefficients c[0] + c[1] z + ... + c[n] z^n -> all n roots
inline std::vector<cd> poly_roots(std::vector<cd> c) {
  while (c.size() > 1 && std::abs(c.back()) == 0.0) c.pop_back();
  const int n = static_cast<int>(c.size()) - 1;
  std::vector<cd> z(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = std::pow(cd(0.4, 0.9), i + 1);
  auto eval = [&](cd x) {
    cd acc = 0.0;
    for (int i = n; i >= 0; --i) acc = acc * x + c[static_cast<std::size_t>(i)];
    return acc;
  };
  double scale = 0.0;
  for (const cd& ci : c) scale = std::max(scale, std::abs(ci));
  for (int iter = 0; iter < 1000; ++iter) {
    double shift = 0.0;
    for (int i = 0; i < n; ++i) {
      cd denom = c.back();
      for (int j = 0; j < n; ++j)
        if (j != i) denom *= z[static_cast<std::size_t>(i)] - z[static_cast<std::size_t>(j)];
      const cd delta = eval(z[static_cast<std::size_t>(i)]) / denom;
      z[static_cast<std::size_t>(i)] -= delta;
      shift = std::max(shift, std::abs(delta));
    }
    if (shift < 1e-14 * std::max(1.0, scale)) break;
  }
  return z;
}

// characteristic polynomial det(zI - A), ascending coefficients
inline std::vector<cd> char_poly(const CMatrix& a) {
  const int n = a.dim();
  std::vector<cd> c(static_cast<std::size_t>(n + 1), cd(0.0, 0.0));
  c[static_cast<std::size_t>(n)] = 1.0;
  CMatrix m = CMatrix::identity(n);
  for (int k = 1; k <= n; ++k) {
    m = a * m;
    const cd ck = -diagode::trace(m) / static_cast<double>(k);
    c[static_cast<std::size_t>(n - k)] = ck;
    for (int i = 0; i < n; ++i) m(i, i) += ck;
  }
  return c;
}

inline std::vector<double> herm_eigs_by_roots(const CMatrix& h) {
  const std::vector<cd> roots = poly_roots(char_poly(h));
  std::vector<double> vals;
  vals.reserve(roots.size());
  for (const cd& r : roots) vals.push_back(r.real());
  std::sort(vals.begin(), vals.end());
  return vals;
}

inline double op_norm_by_roots(const CMatrix& a) {
  const CMatrix g = a.adjoint() * a;
  const std::vector<double> vals = herm_eigs_by_roots(g);
  return std::sqrt(std::max(0.0, vals.back()));
}

inline cd rayleigh(const CMatrix& a, const CVector& x) {
  const CVector ax = a.apply(x);
  cd acc = 0.0;
  for (int i = 0; i < x.dim(); ++i) acc += ax[i] * std::conj(x[i]);
  return acc;
}

// sup Re<Ax,x> over the unit sphere: Monte-Carlo samples refined by power
// iteration on the shifted Hermitian part
struct OmegaOracle {
  double mc_max = 0.0;
  double refined = 0.0;
};

inline OmegaOracle omega_oracle(const CMatrix& a, int samples, diagode::Rng& rng) {
  const int n = a.dim();
  OmegaOracle out;
  out.mc_max = -1e300;
  CVector best(n);
  for (int s = 0; s < samples; ++s) {
    CVector x(n);
    double nrm2 = 0.0;
    for (int i = 0; i < n; ++i) {
      x[i] = cd(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
      nrm2 += std::norm(x[i]);
    }
    x *= cd(1.0 / std::sqrt(nrm2), 0.0);
    const double val = rayleigh(a, x).real();
    if (val > out.mc_max) {
      out.mc_max = val;
      best = x;
    }
  }
  CMatrix h = a.adjoint();
  h += a;
  h *= 0.5;
  const double shift = diagode::max_entry_abs(h) * n + 1.0;
  CMatrix hs = h;
  for (int i = 0; i < n; ++i) hs(i, i) += shift;
  CVector v = best;
  for (int it = 0; it < 2000; ++it) {
    v = hs.apply(v);
    v *= cd(1.0 / v.norm(), 0.0);
  }
  out.refined = rayleigh(h, v).real();
  return out;
}

// worst subinterval sum of a sampled scalar function, O(N^2)
inline double brute_worst_subinterval(const std::vector<double>& g) {
  const int n = static_cast<int>(g.size()) - 1;
  std::vector<double> cum(static_cast<std::size_t>(n + 1), 0.0);
  for (int j = 1; j <= n; ++j)
    cum[static_cast<std::size_t>(j)] =
        cum[static_cast<std::size_t>(j - 1)] + 0.5 / n * (g[static_cast<std::size_t>(j - 1)] + g[static_cast<std::size_t>(j)]);
  double worst = 0.0;
  for (int lo = 0; lo <= n; ++lo)
    for (int hi = lo; hi <= n; ++hi)
      worst = std::max(worst, cum[static_cast<std::size_t>(hi)] - cum[static_cast<std::size_t>(lo)]);
  return worst;
}

}  // namespace oracles
