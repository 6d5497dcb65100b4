#include "diagode/companion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "diagode/kernels.hpp"
#include "diagode/parallel.hpp"

namespace diagode {

namespace {

cd root_of_unity(int k, int n) { return std::polar(1.0, 2.0 * M_PI * k / n); }

cd cpow_int(cd z, int k) {
  cd acc(1.0, 0.0);
  for (int i = 0; i < k; ++i) acc *= z;
  return acc;
}

void require_lambda(cd lambda) {
  if (lambda == cd(0.0, 0.0)) fail(ErrorKind::invalid_input, "lambda must be nonzero");
}

std::vector<cd> cumulative_samples(const std::vector<cd>& g, int n) {
  std::vector<cd> out(static_cast<std::size_t>(n + 1), cd(0.0, 0.0));
  for (int j = 1; j <= n; ++j)
    out[static_cast<std::size_t>(j)] =
        out[static_cast<std::size_t>(j - 1)] +
        0.5 / n * (g[static_cast<std::size_t>(j - 1)] + g[static_cast<std::size_t>(j)]);
  return out;
}

}  // namespace

SampledCompanion sample_companion(const CompanionSpec& spec) {
  if (spec.n < 2) fail(ErrorKind::invalid_input, "companion order must be at least 2");
  if (static_cast<int>(spec.p.size()) != spec.n)
    fail(ErrorKind::invalid_input, "expected one profile p_k per order");
  SampledCompanion sc;
  sc.n = spec.n;
  sc.zeta = spec.zeta;
  sc.grid_n = spec.grid_n;
  sc.p.reserve(spec.p.size());
  for (int k = 0; k < spec.n; ++k) {
    GridFn pk = to_gridfn(spec.p[static_cast<std::size_t>(k)], spec.grid_n);
    for (int j = 0; j <= spec.grid_n; ++j) {
      const cd v = pk.scalar_at(j);
      if (std::abs(v.imag()) > 1e-12 * std::max(1.0, std::abs(v)) || v.real() <= 0.0)
        fail(ErrorKind::contract_violation,
             "profile p_" + std::to_string(k + 1) + " must take positive values");
    }
    sc.p.push_back(std::move(pk));
  }
  sc.q.assign(static_cast<std::size_t>(spec.n), {});
  for (auto& row : sc.q) row.assign(static_cast<std::size_t>(spec.n), GridFn());
  for (const auto& [idx, expr] : spec.q) {
    const auto [k, l] = idx;
    if (k < 1 || k > spec.n || l < 1 || l > k)
      fail(ErrorKind::invalid_input, "potential index (k,l) must satisfy 1 <= l <= k <= n");
    sc.q[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(l - 1)] = to_gridfn(expr, spec.grid_n);
  }

  // rho = exp((1/n) sum ln p_m), positive branch, with its exact derivative
  const int n = spec.grid_n;
  std::vector<cd> rho(static_cast<std::size_t>(n + 1)), drho(static_cast<std::size_t>(n + 1));
  for (int j = 0; j <= n; ++j) {
    double logsum = 0.0;
    cd dlogsum = 0.0;
    for (int m = 0; m < spec.n; ++m) {
      const cd v = sc.p[static_cast<std::size_t>(m)].scalar_at(j);
      const cd dv = sc.p[static_cast<std::size_t>(m)].deriv_at(j)[0];
      logsum += std::log(v.real());
      dlogsum += dv / v;
    }
    const double r = std::exp(logsum / spec.n);
    rho[static_cast<std::size_t>(j)] = r;
    drho[static_cast<std::size_t>(j)] = r / static_cast<double>(spec.n) * dlogsum;
  }
  sc.rho = GridFn::from_samples(GridFn::Kind::scalar, 1, std::move(rho), std::move(drho), true);

  std::vector<cd> qsum(static_cast<std::size_t>(n + 1), cd(0.0, 0.0));
  for (int l = 0; l < spec.n; ++l) {
    const GridFn& qll = sc.q[static_cast<std::size_t>(l)][static_cast<std::size_t>(l)];
    if (qll.grid_n() == 0) continue;
    for (int j = 0; j <= n; ++j) qsum[static_cast<std::size_t>(j)] += qll.scalar_at(j);
  }
  sc.qdiag_sum = GridFn::from_samples(GridFn::Kind::scalar, 1, std::move(qsum));
  return sc;
}

namespace {

cd q_value(const SampledCompanion& sc, int k, int l, int j) {  // 1-based k,l
  const GridFn& g = sc.q[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(l - 1)];
  if (g.grid_n() == 0) return cd(0.0, 0.0);
  return g.scalar_at(j);
}

}  // namespace

GridFn build_D(const SampledCompanion& sc, cd lambda) {
  require_lambda(lambda);
  const int n = sc.n;
  GridFn d = GridFn::zeros(GridFn::Kind::matrix, sc.grid_n, n);
  const cd corner_pow = cpow_int(lambda + sc.zeta, n);
  for (int j = 0; j <= sc.grid_n; ++j) {
    auto v = d.at(j);
    for (int k = 1; k <= n; ++k) {
      for (int l = 1; l <= n; ++l) {
        cd val(0.0, 0.0);
        if (l == k + 1)
          val = sc.p[static_cast<std::size_t>(k - 1)].scalar_at(j);
        else if (k == n && l == 1)
          val = corner_pow * sc.p[static_cast<std::size_t>(n - 1)].scalar_at(j) - q_value(sc, n, 1, j);
        else if (k + 1 - n < l && l <= k)
          val = -q_value(sc, k, l, j);
        v[static_cast<std::size_t>(k - 1) * n + (l - 1)] = val;
      }
    }
  }
  return d;
}

GridFn build_D0(const SampledCompanion& sc, cd lambda) {
  require_lambda(lambda);
  const int n = sc.n;
  GridFn d = GridFn::zeros(GridFn::Kind::matrix, sc.grid_n, n);
  const cd corner_pow = cpow_int(lambda, n);
  for (int j = 0; j <= sc.grid_n; ++j) {
    auto v = d.at(j);
    for (int k = 1; k < n; ++k)
      v[static_cast<std::size_t>(k - 1) * n + k] = sc.p[static_cast<std::size_t>(k - 1)].scalar_at(j);
    v[static_cast<std::size_t>(n - 1) * n] = corner_pow * sc.p[static_cast<std::size_t>(n - 1)].scalar_at(j);
  }
  return d;
}

GridFn amplitude_profile(const SampledCompanion& sc) { return sc.rho; }

GridFn build_A_lambda(const SampledCompanion& sc, cd lambda) {
  require_lambda(lambda);
  const int n = sc.n;
  GridFn a = GridFn::zeros(GridFn::Kind::matrix, sc.grid_n, n);
  for (int j = 0; j <= sc.grid_n; ++j) {
    auto v = a.at(j);
    const cd lr = lambda * sc.rho.scalar_at(j);
    for (int k = 1; k <= n; ++k) v[static_cast<std::size_t>(k - 1) * n + (k - 1)] = lr * root_of_unity(k, n);
  }
  return a;
}

std::pair<GridFn, GridFn> build_S_lambda(const SampledCompanion& sc, cd lambda) {
  require_lambda(lambda);
  const int n = sc.n;
  GridFn s = GridFn::zeros(GridFn::Kind::matrix, sc.grid_n, n);
  GridFn s_inv = GridFn::zeros(GridFn::Kind::matrix, sc.grid_n, n);
  for (int j = 0; j <= sc.grid_n; ++j) {
    auto sv = s.at(j);
    auto iv = s_inv.at(j);
    const cd lr = lambda * sc.rho.scalar_at(j);
    cd pprod(1.0, 0.0);  // prod_{m<l} p_m
    std::vector<cd> prods(static_cast<std::size_t>(n + 1));
    prods[0] = 1.0;
    for (int m = 1; m <= n; ++m) {
      pprod *= sc.p[static_cast<std::size_t>(m - 1)].scalar_at(j);
      prods[static_cast<std::size_t>(m)] = pprod;
    }
    for (int k = 1; k <= n; ++k) {
      const cd akk = lr * root_of_unity(k, n);
      cd pow_lo(1.0, 0.0);  // akk^{l-1}
      for (int l = 1; l <= n; ++l) {
        sv[static_cast<std::size_t>(l - 1) * n + (k - 1)] = pow_lo / prods[static_cast<std::size_t>(l - 1)];
        iv[static_cast<std::size_t>(k - 1) * n + (l - 1)] =
            prods[static_cast<std::size_t>(l - 1)] / (pow_lo * static_cast<double>(n));
        pow_lo *= akk;
      }
    }
  }
  return {std::move(s), std::move(s_inv)};
}

GridFn diag_correction(const SampledCompanion& sc) {
  const int n = sc.grid_n;
  std::vector<cd> v(static_cast<std::size_t>(n + 1), cd(0.0, 0.0));
  for (int j = 0; j <= n; ++j) {
    cd acc(0.0, 0.0);
    for (int m = 1; m <= sc.n; ++m) {
      const GridFn& pm = sc.p[static_cast<std::size_t>(m - 1)];
      acc += (2.0 * m - sc.n - 1.0) / (2.0 * sc.n) * pm.deriv_at(j)[0] / pm.scalar_at(j);
    }
    v[static_cast<std::size_t>(j)] = acc;
  }
  return GridFn::from_samples(GridFn::Kind::scalar, 1, std::move(v));
}

GfMatrices gf_matrices(int n) {
  if (n < 2) fail(ErrorKind::invalid_input, "order must be at least 2");
  GfMatrices out{CMatrix(n), {}};
  for (int k = 1; k <= n; ++k)
    for (int l = 1; l <= n; ++l) out.g(k - 1, l - 1) = root_of_unity(k, n);
  out.f.reserve(static_cast<std::size_t>(n));
  for (int m = 1; m <= n; ++m) {
    CMatrix fm(n);
    for (int k = 1; k <= n; ++k)
      for (int l = 1; l <= n; ++l)
        fm(k - 1, l - 1) = root_of_unity((l - k) * (m - 1), n) / static_cast<double>(n);
    out.f.push_back(std::move(fm));
  }
  return out;
}

double residual_check(const SampledCompanion& sc, cd lambda) {
  require_lambda(lambda);
  const int n = sc.n;
  const auto [s, s_inv] = build_S_lambda(sc, lambda);
  const GridFn d = build_D(sc, lambda);
  const GridFn d0 = build_D0(sc, lambda);
  const GfMatrices gf = gf_matrices(n);
  const std::size_t nd = static_cast<std::size_t>(n);
  std::vector<cd> tmp(nd * nd), tmp2(nd * nd);
  const auto& ker = kernels::active();
  double acc = 0.0;
  for (int j = 0; j <= sc.grid_n; ++j) {
    CMatrix diff(n);
    std::vector<cd> dd(nd * nd);
    ker.sub(d.at(j).data(), d0.at(j).data(), dd.data(), nd * nd);
    ker.matmul(dd.data(), s.at(j).data(), tmp.data(), nd);
    ker.matmul(s_inv.at(j).data(), tmp.data(), tmp2.data(), nd);
    std::copy(tmp2.begin(), tmp2.end(), diff.data().begin());
    CMatrix zg = gf.g;
    zg *= sc.zeta * sc.rho.scalar_at(j);
    diff -= zg;
    for (int m = 1; m <= n; ++m) {
      const cd qmm = q_value(sc, m, m, j);
      if (qmm != cd(0.0, 0.0)) {
        CMatrix fm = gf.f[static_cast<std::size_t>(m - 1)];
        fm *= qmm;
        diff += fm;
      }
    }
    const double w = (j == 0 || j == sc.grid_n) ? 0.5 : 1.0;
    acc += w * op_norm(diff);
  }
  return acc / sc.grid_n;
}

SectorContext sector_permutation(int n, int m) {
  if (n < 2) fail(ErrorKind::invalid_input, "order must be at least 2");
  if (m < 1 || m > 2 * n) fail(ErrorKind::invalid_input, "sector index must lie in 1..2n");
  SectorContext sec;
  sec.n = n;
  sec.m = m;
  sec.midpoint_arg = (2.0 * m - 1.0) * M_PI / (2.0 * n);
  sec.tau.resize(static_cast<std::size_t>(n));
  std::iota(sec.tau.begin(), sec.tau.end(), 1);
  std::vector<double> key(static_cast<std::size_t>(n + 1));
  for (int k = 1; k <= n; ++k) key[static_cast<std::size_t>(k)] = std::cos(sec.midpoint_arg + 2.0 * M_PI * k / n);
  std::sort(sec.tau.begin(), sec.tau.end(),
            [&](int a, int b) { return key[static_cast<std::size_t>(a)] < key[static_cast<std::size_t>(b)]; });
  for (std::size_t i = 0; i + 1 < sec.tau.size(); ++i)
    if (std::abs(key[static_cast<std::size_t>(sec.tau[i])] - key[static_cast<std::size_t>(sec.tau[i + 1])]) < 1e-12)
      fail(ErrorKind::contract_violation, "tie in the sector ordering (cannot happen at midpoints)");
  return sec;
}

bool lambda_in_sector(cd lambda, int n, int m) {
  if (lambda == cd(0.0, 0.0)) return false;
  double arg = std::arg(lambda);
  if (arg < 0.0) arg += 2.0 * M_PI;
  const double lo = (m - 1) * M_PI / n;
  const double hi = m * M_PI / n;
  return arg > lo + 1e-15 && arg < hi - 1e-15;
}

BirkhoffSolution birkhoff_solution(const SampledCompanion& sc, cd lambda, int k,
                                   const SectorContext& sec) {
  require_lambda(lambda);
  if (k < 1 || k > sc.n) fail(ErrorKind::invalid_input, "mode index must lie in 1..n");
  if (!lambda_in_sector(lambda, sec.n, sec.m))
    fail(ErrorKind::invalid_input, "lambda lies outside the requested sector");
  const int n = sc.grid_n;

  std::vector<cd> amp(static_cast<std::size_t>(n + 1));
  for (int j = 0; j <= n; ++j) {
    double logamp = 0.0;
    for (int l = 1; l <= sc.n; ++l)
      logamp += (sc.n - 2.0 * l + 1.0) / (2.0 * sc.n) *
                std::log(sc.p[static_cast<std::size_t>(l - 1)].scalar_at(j).real());
    amp[static_cast<std::size_t>(j)] = std::exp(logamp);
  }
  GridFn amplitude = GridFn::from_samples(GridFn::Kind::scalar, 1, amp);

  const cd mode = root_of_unity(k, sc.n);
  std::vector<cd> integrand(static_cast<std::size_t>(n + 1));
  for (int j = 0; j <= n; ++j)
    integrand[static_cast<std::size_t>(j)] = (lambda + sc.zeta) * sc.rho.scalar_at(j) * mode -
                                             sc.qdiag_sum.scalar_at(j) / static_cast<double>(sc.n);
  const std::vector<cd> phase = cumulative_samples(integrand, n);

  GridFn y = GridFn::zeros(GridFn::Kind::vector, n, sc.n);
  for (int j = 0; j <= n; ++j) {
    const cd ph = phase[static_cast<std::size_t>(j)];
    if (ph.real() > 700.0) fail(ErrorKind::step_failure, "asymptotic solution exceeds the double range");
    y.at(j)[static_cast<std::size_t>(k - 1)] = amp[static_cast<std::size_t>(j)] * std::exp(ph);
  }
  const auto [s, s_inv] = build_S_lambda(sc, lambda);
  BirkhoffSolution out{std::move(y), GridFn(), std::move(amplitude), phase};
  out.x = apply_nodes(s, out.y);
  return out;
}

GridFn transformed_coefficient(const SampledCompanion& sc, cd lambda) {
  const auto [s, s_inv] = build_S_lambda(sc, lambda);
  return conjugate(s, s_inv, build_D(sc, lambda)).first;
}

StructuredProblem companion_structured_problem(const SampledCompanion& sc, cd lambda,
                                               const SectorContext& sec, int k, Side side) {
  require_lambda(lambda);
  if (!lambda_in_sector(lambda, sec.n, sec.m))
    fail(ErrorKind::invalid_input, "lambda lies outside the requested sector");
  if (k < 1 || k > sc.n) fail(ErrorKind::invalid_input, "mode index must lie in 1..n");
  const int nn = sc.n;
  const int n = sc.grid_n;

  // rescale so the smallest pairwise profile separation is one
  double min_dist = std::numeric_limits<double>::infinity();
  for (int a = 1; a <= nn; ++a)
    for (int b = a + 1; b <= nn; ++b)
      min_dist = std::min(min_dist, std::abs(root_of_unity(a, nn) - root_of_unity(b, nn)));
  double rho_min = std::numeric_limits<double>::infinity();
  for (int j = 0; j <= n; ++j) rho_min = std::min(rho_min, sc.rho.scalar_at(j).real());
  const double scale = min_dist * rho_min;
  if (!(scale > 0.0)) fail(ErrorKind::contract_violation, "amplitude profile must stay positive");

  StructuredProblem prob;
  prob.dim = nn;
  prob.side = side;
  prob.d = lambda * scale;
  prob.blocks.resize(static_cast<std::size_t>(nn));
  prob.h.resize(static_cast<std::size_t>(nn));
  int kpos = -1;
  for (int pos = 0; pos < nn; ++pos) {
    const int mode = sec.tau[static_cast<std::size_t>(pos)];
    if (mode == k) kpos = pos;
    prob.blocks[static_cast<std::size_t>(pos)] = {mode - 1};
    const cd unit = root_of_unity(mode, nn) / scale;
    std::vector<cd> hv(static_cast<std::size_t>(n + 1)), hd(static_cast<std::size_t>(n + 1));
    for (int j = 0; j <= n; ++j) {
      hv[static_cast<std::size_t>(j)] = unit * sc.rho.scalar_at(j);
      hd[static_cast<std::size_t>(j)] = unit * sc.rho.deriv_at(j)[0];
    }
    prob.h[static_cast<std::size_t>(pos)] =
        GridFn::from_samples(GridFn::Kind::scalar, 1, std::move(hv), std::move(hd), true);
  }
  prob.k = kpos;

  // V = transformed coefficient minus the leading diagonal
  GridFn v = transformed_coefficient(sc, lambda);
  for (int j = 0; j <= n; ++j) {
    const cd lr = lambda * sc.rho.scalar_at(j);
    auto vv = v.at(j);
    for (int mode = 1; mode <= nn; ++mode)
      vv[static_cast<std::size_t>(mode - 1) * nn + (mode - 1)] -= lr * root_of_unity(mode, nn);
  }
  prob.v = std::move(v);
  prob.xi = CVector::unit(nn, k - 1);
  return prob;
}

std::vector<DecayRow> verify_asymptotics(const SampledCompanion& sc, const SectorContext& sec,
                                         const std::vector<double>& magnitudes, int k, Side side,
                                         const SolveOptions& opts) {
  if (magnitudes.empty()) fail(ErrorKind::invalid_input, "need at least one magnitude");
  std::vector<DecayRow> rows(magnitudes.size());
  const cd ray = std::polar(1.0, sec.midpoint_arg);

  parallel_for(static_cast<int>(magnitudes.size()), opts.threads, [&](int i) {
    const double mag = magnitudes[static_cast<std::size_t>(i)];
    const cd lambda = mag * ray;
    SolveOptions inner = opts;
    inner.threads = 1;
    StructuredProblem prob = companion_structured_problem(sc, lambda, sec, k, side);
    const StructuredResult sol = solve_structured(prob, inner);
    const BirkhoffSolution birk = birkhoff_solution(sc, lambda, k, sec);

    // compare in the Birkhoff exponential frame, normalized at the pinned end
    const int n = sc.grid_n;
    const int anchor = side == Side::left ? 0 : n;
    const cd phase_anchor = birk.phase[static_cast<std::size_t>(anchor)];
    const double amp_anchor = birk.amplitude.scalar_at(anchor).real();
    double rel = 0.0;
    for (int j = 0; j <= n; ++j) {
      const cd delta = sol.full.log_factor[static_cast<std::size_t>(j)] -
                       (birk.phase[static_cast<std::size_t>(j)] - phase_anchor);
      const cd factor = amp_anchor * std::exp(delta);
      const double ampj = birk.amplitude.scalar_at(j).real();
      double num = 0.0;
      const auto yv = sol.full.y.at(j);
      for (int c = 0; c < sc.n; ++c) {
        const cd want = (c == k - 1) ? cd(ampj, 0.0) : cd(0.0, 0.0);
        num += std::norm(factor * yv[static_cast<std::size_t>(c)] - want);
      }
      rel = std::max(rel, std::sqrt(num) / ampj);
    }
    DecayRow row;
    row.magnitude = mag;
    row.rel_sup_error = rel;
    row.residual_l1 = residual_check(sc, lambda);
    row.scaled_residual = mag * row.residual_l1;
    rows[static_cast<std::size_t>(i)] = row;
  });
  return rows;
}

}  // namespace diagode
