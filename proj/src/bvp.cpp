#include "diagode/bvp.hpp"

#include <algorithm>
#include <cmath>

#include "diagode/kernels.hpp"

namespace diagode {

void require_orthoprojector(const CMatrix& p) {
  require_finite(p.data(), "boundary projector");
  const int n = p.dim();
  CMatrix dev = p * p;
  dev -= p;
  CMatrix herm = p.adjoint();
  herm -= p;
  const double scale = std::max(1.0, max_entry_abs(p));
  if (max_entry_abs(dev) > 1e-10 * scale || max_entry_abs(herm) > 1e-10 * scale)
    fail(ErrorKind::contract_violation, "boundary operator is not an orthoprojector");
  (void)n;
}

GridFn fundamental_matrix(const GridFn& a) {
  if (a.kind() != GridFn::Kind::matrix) fail(ErrorKind::invalid_input, "coefficient must be matrix-valued");
  const int n = a.grid_n();
  const int dim = a.dim();
  const std::size_t nd = static_cast<std::size_t>(dim);
  const std::size_t stride = nd * nd;
  const double h = a.h();
  const double anorm = norm_c(a);
  const int subs = std::max(4, static_cast<int>(std::ceil(h * anorm / 0.025)));
  const double dt = h / subs;

  GridFn m = GridFn::zeros(GridFn::Kind::matrix, n, dim);
  std::vector<cd> cur(stride, cd(0.0, 0.0));
  for (int i = 0; i < dim; ++i) cur[static_cast<std::size_t>(i) * nd + i] = 1.0;
  std::copy(cur.begin(), cur.end(), m.at(0).begin());

  const auto& k = kernels::active();
  std::vector<cd> a_lo(stride), a_mid(stride), a_hi(stride);
  std::vector<cd> k1(stride), k2(stride), k3(stride), k4(stride), tmp(stride);

  auto lerp = [&](int j, double frac, std::vector<cd>& out) {
    const auto lo = a.at(j);
    const auto hi = a.at(j + 1);
    for (std::size_t i = 0; i < stride; ++i) out[i] = lo[i] + frac * (hi[i] - lo[i]);
  };

  for (int j = 0; j < n; ++j) {
    for (int s = 0; s < subs; ++s) {
      const double f0 = static_cast<double>(s) / subs;
      const double f1 = (static_cast<double>(s) + 0.5) / subs;
      const double f2 = static_cast<double>(s + 1) / subs;
      lerp(j, f0, a_lo);
      lerp(j, f1, a_mid);
      lerp(j, f2, a_hi);
      k.matmul(a_lo.data(), cur.data(), k1.data(), nd);
      std::copy(cur.begin(), cur.end(), tmp.begin());
      k.axpy(cd(0.5 * dt, 0.0), k1.data(), tmp.data(), stride);
      k.matmul(a_mid.data(), tmp.data(), k2.data(), nd);
      std::copy(cur.begin(), cur.end(), tmp.begin());
      k.axpy(cd(0.5 * dt, 0.0), k2.data(), tmp.data(), stride);
      k.matmul(a_mid.data(), tmp.data(), k3.data(), nd);
      std::copy(cur.begin(), cur.end(), tmp.begin());
      k.axpy(cd(dt, 0.0), k3.data(), tmp.data(), stride);
      k.matmul(a_hi.data(), tmp.data(), k4.data(), nd);
      k.axpy(cd(dt / 6.0, 0.0), k1.data(), cur.data(), stride);
      k.axpy(cd(dt / 3.0, 0.0), k2.data(), cur.data(), stride);
      k.axpy(cd(dt / 3.0, 0.0), k3.data(), cur.data(), stride);
      k.axpy(cd(dt / 6.0, 0.0), k4.data(), cur.data(), stride);
    }
    if (!all_finite(cur))
      fail(ErrorKind::step_failure,
           "fundamental matrix overflowed near node " + std::to_string(j + 1));
    std::copy(cur.begin(), cur.end(), m.at(j + 1).begin());
  }
  return m;
}

double dichotomy_worst(const GridFn& a, const CMatrix& p) {
  require_orthoprojector(p);
  const int n = a.grid_n();
  const int dim = a.dim();
  CMatrix refl = p;
  refl *= 2.0;
  refl -= CMatrix::identity(dim);
  std::vector<double> g(static_cast<std::size_t>(n + 1));
  for (int j = 0; j <= n; ++j) g[static_cast<std::size_t>(j)] = omega(refl * a.matrix_at(j));
  // cumulative integral, then the worst subinterval via a running minimum
  double fcur = 0.0, fmin = 0.0, worst = 0.0;
  for (int j = 1; j <= n; ++j) {
    fcur += 0.5 * a.h() * (g[static_cast<std::size_t>(j - 1)] + g[static_cast<std::size_t>(j)]);
    worst = std::max(worst, fcur - fmin);
    fmin = std::min(fmin, fcur);
  }
  return worst;
}

DichotomyResult check_dichotomy(const GridFn& a, const CMatrix& p, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) fail(ErrorKind::invalid_input, "gamma must lie in (0,1)");
  DichotomyResult r;
  r.worst = dichotomy_worst(a, p);
  r.holds = r.worst <= -std::log(gamma) + 1e-12;
  return r;
}

namespace {

struct FundamentalData {
  GridFn m;
  std::vector<Lu> lus;  // factorization of M at each node
};

FundamentalData factorize_fundamental(const GridFn& a) {
  FundamentalData fd{fundamental_matrix(a), {}};
  fd.lus.reserve(static_cast<std::size_t>(a.grid_n() + 1));
  for (int j = 0; j <= a.grid_n(); ++j) fd.lus.emplace_back(fd.m.matrix_at(j));
  return fd;
}

// x(t) = M(t) (c + int_0^t M^{-1} f)
GridFn direct_from(const FundamentalData& fd, const GridFn& f, const CMatrix& p, const CVector& xi) {
  const int n = fd.m.grid_n();
  const int dim = fd.m.dim();
  std::vector<CVector> cum(static_cast<std::size_t>(n + 1), CVector(dim));
  CVector prev(dim);
  for (int j = 0; j <= n; ++j) {
    CVector g = fd.lus[static_cast<std::size_t>(j)].solve(f.vector_at(j));
    if (j > 0) {
      CVector acc = cum[static_cast<std::size_t>(j - 1)];
      CVector inc = prev;
      inc += g;
      inc *= cd(0.5 / n, 0.0);
      acc += inc;
      cum[static_cast<std::size_t>(j)] = acc;
    }
    prev = g;
  }
  CMatrix q = CMatrix::identity(dim);
  q -= p;  // 1 - P
  CMatrix bop = p;
  bop += q * fd.m.matrix_at(n);
  CVector rhs = xi;
  rhs -= (q * fd.m.matrix_at(n)).apply(cum[static_cast<std::size_t>(n)]);
  Lu blu(bop);
  if (blu.singular())
    fail(ErrorKind::no_unique_solution, "boundary operator P + (1-P)M(1) is singular");
  const CVector c = blu.solve(rhs);
  GridFn x = GridFn::zeros(GridFn::Kind::vector, n, dim);
  for (int j = 0; j <= n; ++j) {
    CVector w = c;
    w += cum[static_cast<std::size_t>(j)];
    x.set_node(j, fd.m.matrix_at(j).apply(w));
  }
  return x;
}

}  // namespace

GridFn solve_direct(const BvpProblem& prob) {
  require_orthoprojector(prob.p);
  if (prob.f.kind() != GridFn::Kind::vector || prob.f.dim() != prob.a.dim() ||
      prob.f.grid_n() != prob.a.grid_n() || prob.xi.dim() != prob.a.dim())
    fail(ErrorKind::invalid_input, "boundary problem shape mismatch");
  const FundamentalData fd = factorize_fundamental(prob.a);
  return direct_from(fd, prob.f, prob.p, prob.xi);
}

CMatrix green_kernel(const GridFn& m, const CMatrix& p, int t_idx, int s_idx) {
  CMatrix factor = p;
  if (s_idx > t_idx) factor -= CMatrix::identity(p.dim());  // theta(0) = 0
  return factor * (m.matrix_at(t_idx) * Lu(m.matrix_at(s_idx)).inverse());
}

double norm_c_vec(const GridFn& x) { return norm_c(x); }

ContractionResult solve_contraction(const GridFn& a, const GridFn& v, const GridFn& f,
                                    const CMatrix& p, const CVector& xi,
                                    const ContractionParams& params) {
  require_orthoprojector(p);
  if (!a.same_shape(v)) fail(ErrorKind::invalid_input, "coefficient/perturbation shape mismatch");
  if (!(params.gamma > 0.0 && params.gamma < 1.0 && params.theta > 0.0 && params.theta < 1.0))
    fail(ErrorKind::invalid_input, "contraction parameters must lie in (0,1)");
  const int n = a.grid_n();
  const int dim = a.dim();

  const double ascale = std::max(1.0, norm_c(a));
  for (int j = 0; j <= n; ++j) {
    CMatrix comm = a.matrix_at(j) * p;
    comm -= p * a.matrix_at(j);
    if (max_entry_abs(comm) > 1e-10 * ascale)
      fail(ErrorKind::contract_violation, "coefficient does not commute with the boundary projector");
  }
  if (norm_l1(v) > params.theta * params.gamma * (1.0 + 1e-9))
    fail(ErrorKind::contract_violation, "perturbation L1 norm exceeds theta * gamma");
  if (!check_dichotomy(a, p, params.gamma).holds)
    fail(ErrorKind::contract_violation, "dichotomy condition fails for the requested gamma");

  const FundamentalData fd = factorize_fundamental(a);
  const GridFn x0 = direct_from(fd, f, p, xi);
  const double x0_scale = std::max(1.0, norm_c(x0));

  CMatrix pm = p;
  CMatrix pm1 = p;
  pm1 -= CMatrix::identity(dim);

  GridFn x = x0;
  double prev_delta = -1.0;
  double factor = 0.0;
  int iters = 0;
  for (int it = 1; it <= params.max_iters; ++it) {
    // cumulative integral of M^{-1} V x
    std::vector<CVector> cum(static_cast<std::size_t>(n + 1), CVector(dim));
    CVector prev(dim);
    for (int j = 0; j <= n; ++j) {
      CVector g = fd.lus[static_cast<std::size_t>(j)].solve(v.matrix_at(j).apply(x.vector_at(j)));
      if (j > 0) {
        CVector acc = cum[static_cast<std::size_t>(j - 1)];
        CVector inc = prev;
        inc += g;
        inc *= cd(0.5 / n, 0.0);
        acc += inc;
        cum[static_cast<std::size_t>(j)] = acc;
      }
      prev = g;
    }
    const CVector total = cum[static_cast<std::size_t>(n)];
    GridFn x_new = x0;
    double delta = 0.0;
    for (int j = 0; j <= n; ++j) {
      CVector tail = total;
      tail -= cum[static_cast<std::size_t>(j)];
      CVector w = pm.apply(cum[static_cast<std::size_t>(j)]);
      w += pm1.apply(tail);
      CVector val = x0.vector_at(j);
      val += fd.m.matrix_at(j).apply(w);
      CVector diff = val;
      diff -= x.vector_at(j);
      delta = std::max(delta, diff.norm());
      x_new.set_node(j, val);
    }
    x = std::move(x_new);
    iters = it;
    if (prev_delta > 100.0 * params.tol * x0_scale && delta > 0.0)
      factor = std::max(factor, delta / prev_delta);
    if (delta <= params.tol * x0_scale) break;
    if (it == params.max_iters)
      fail(ErrorKind::divergence, "contraction iteration did not converge");
    prev_delta = delta;
  }
  return ContractionResult{std::move(x), x0, iters, factor};
}

}  // namespace diagode
