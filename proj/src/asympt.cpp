#include "diagode/asympt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "diagode/kernels.hpp"

namespace diagode {

namespace {

std::vector<int> membership_of(int dim, const std::vector<std::vector<int>>& blocks) {
  std::vector<int> member(static_cast<std::size_t>(dim), -1);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].empty()) fail(ErrorKind::invalid_input, "family block must not be empty");
    for (int i : blocks[b]) {
      if (i < 0 || i >= dim) fail(ErrorKind::invalid_input, "family block index out of range");
      if (member[static_cast<std::size_t>(i)] != -1)
        fail(ErrorKind::invalid_input, "family blocks must be disjoint");
      member[static_cast<std::size_t>(i)] = static_cast<int>(b);
    }
  }
  for (int i = 0; i < dim; ++i)
    if (member[static_cast<std::size_t>(i)] == -1)
      fail(ErrorKind::invalid_input, "family blocks must cover every index");
  return member;
}

GridFn block_diagonal_part(const GridFn& a, const std::vector<int>& member) {
  GridFn r = a;
  const int d = a.dim();
  for (int j = 0; j <= a.grid_n(); ++j) {
    auto v = r.at(j);
    for (int i = 0; i < d; ++i)
      for (int c = 0; c < d; ++c)
        if (member[static_cast<std::size_t>(i)] != member[static_cast<std::size_t>(c)])
          v[static_cast<std::size_t>(i) * d + c] = 0.0;
  }
  return r;
}

// cumulative trapezoid of a scalar grid function scaled by `factor`
std::vector<cd> cumulative(const GridFn& f, cd factor) {
  const int n = f.grid_n();
  std::vector<cd> out(static_cast<std::size_t>(n + 1), cd(0.0, 0.0));
  for (int j = 1; j <= n; ++j)
    out[static_cast<std::size_t>(j)] = out[static_cast<std::size_t>(j - 1)] +
                                       factor * 0.5 * f.h() * (f.scalar_at(j - 1) + f.scalar_at(j));
  return out;
}

cd guarded_exp(cd z) {
  if (z.real() > 700.0)
    fail(ErrorKind::step_failure, "solution scale exceeds the double range");
  return std::exp(z);
}

}  // namespace

void ParamFamily::validate() const {
  if (dim < 1) fail(ErrorKind::invalid_input, "family dimension must be positive");
  if (blocks.empty() || blocks.size() != h.size())
    fail(ErrorKind::invalid_input, "family must pair every block with a profile");
  (void)membership_of(dim, blocks);
  const int n = v.grid_n();
  if (v.kind() != GridFn::Kind::matrix || v.dim() != dim)
    fail(ErrorKind::invalid_input, "family perturbation must be a matrix function of the full dimension");
  for (const GridFn& prof : h)
    if (prof.kind() != GridFn::Kind::scalar || prof.grid_n() != n)
      fail(ErrorKind::invalid_input, "family profiles must be scalar functions on the common grid");
  if (std::abs(std::abs(direction) - 1.0) > 1e-9)
    fail(ErrorKind::invalid_input, "family direction must have unit modulus");
  if (magnitudes.empty()) fail(ErrorKind::invalid_input, "family needs at least one magnitude");
  double prev = 0.0;
  for (double m : magnitudes) {
    if (!(m > prev)) fail(ErrorKind::invalid_input, "magnitudes must be strictly increasing and positive");
    prev = m;
  }
}

GridFn assemble(const ParamFamily& fam, int nu) {
  fam.validate();
  const cd d = fam.d(nu);
  GridFn a = fam.v;
  for (std::size_t b = 0; b < fam.blocks.size(); ++b) {
    for (int j = 0; j <= a.grid_n(); ++j) {
      const cd add = d * fam.h[b].scalar_at(j);
      auto v = a.at(j);
      for (int i : fam.blocks[b]) v[static_cast<std::size_t>(i) * fam.dim + i] += add;
    }
  }
  return a;
}

GridFn diagonal_model(const ParamFamily& fam, int nu) {
  GridFn a = assemble(fam, nu);
  return block_diagonal_part(a, membership_of(fam.dim, fam.blocks));
}

bool ConditionsReport::ok() const {
  for (const PairCondition& p : pairs)
    if (!p.separation_ok || !p.dichotomy_ok) return false;
  return true;
}

ConditionsReport check_conditions(const ParamFamily& fam, double gamma) {
  fam.validate();
  if (!(gamma > 0.0 && gamma < 1.0)) fail(ErrorKind::invalid_input, "gamma must lie in (0,1)");
  const int m = fam.block_count();
  const int n = fam.v.grid_n();
  ConditionsReport rep;
  rep.min_separation = std::numeric_limits<double>::infinity();
  rep.worst = -std::numeric_limits<double>::infinity();
  const double lng = -std::log(gamma);
  for (int k = 0; k < m; ++k) {
    for (int l = k + 1; l < m; ++l) {
      double min_gap = std::numeric_limits<double>::infinity();
      for (int j = 0; j <= n; ++j)
        min_gap = std::min(min_gap, std::abs(fam.h[static_cast<std::size_t>(k)].scalar_at(j) -
                                             fam.h[static_cast<std::size_t>(l)].scalar_at(j)));
      rep.min_separation = std::min(rep.min_separation, min_gap);
      for (std::size_t nu = 0; nu < fam.magnitudes.size(); ++nu) {
        const cd d = fam.d(static_cast<int>(nu));
        // running-extremum scan of the cumulative integral of Re d (h_k - h_l)
        double fcur = 0.0, fmin = 0.0, worst = 0.0;
        for (int j = 1; j <= n; ++j) {
          const cd glo = fam.h[static_cast<std::size_t>(k)].scalar_at(j - 1) -
                         fam.h[static_cast<std::size_t>(l)].scalar_at(j - 1);
          const cd ghi = fam.h[static_cast<std::size_t>(k)].scalar_at(j) -
                         fam.h[static_cast<std::size_t>(l)].scalar_at(j);
          fcur += 0.5 / n * (d * glo + d * ghi).real();
          worst = std::max(worst, fcur - fmin);
          fmin = std::min(fmin, fcur);
        }
        PairCondition pc;
        pc.nu = static_cast<int>(nu);
        pc.k = k;
        pc.l = l;
        pc.min_gap = min_gap;
        pc.worst = worst;
        pc.separation_ok = min_gap >= 1.0 - 1e-9;
        pc.dichotomy_ok = worst <= lng + 1e-12;
        rep.worst = std::max(rep.worst, worst);
        rep.pairs.push_back(pc);
      }
    }
  }
  return rep;
}

ParamFamily sort_blocks_by_direction(const ParamFamily& fam) {
  fam.validate();
  std::vector<int> order(static_cast<std::size_t>(fam.block_count()));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> key(order.size());
  for (std::size_t b = 0; b < order.size(); ++b)
    key[b] = (fam.direction * integrate(fam.h[b])[0]).real();
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return key[static_cast<std::size_t>(a)] < key[static_cast<std::size_t>(b)];
  });
  ParamFamily out = fam;
  for (std::size_t b = 0; b < order.size(); ++b) {
    out.blocks[b] = fam.blocks[static_cast<std::size_t>(order[b])];
    out.h[b] = fam.h[static_cast<std::size_t>(order[b])];
  }
  return out;
}

namespace {

struct IndexFrameInputs {
  int dim;
  const std::vector<std::vector<int>>* blocks;
  const std::vector<GridFn>* h;
  const GridFn* v;
  cd d;
  int k;
};

IndexFrame build_index_frame_impl(const IndexFrameInputs& in, const FrameBudget& budget, bool permissive) {
  const int m = static_cast<int>(in.blocks->size());
  if (in.k < 0 || in.k >= m) fail(ErrorKind::invalid_input, "block index out of range");
  const int n = in.v->grid_n();

  std::vector<int> zero = (*in.blocks)[static_cast<std::size_t>(in.k)];
  std::vector<int> minus, plus;
  for (int l = 0; l < in.k; ++l)
    minus.insert(minus.end(), (*in.blocks)[static_cast<std::size_t>(l)].begin(),
                 (*in.blocks)[static_cast<std::size_t>(l)].end());
  for (int l = in.k + 1; l < m; ++l)
    plus.insert(plus.end(), (*in.blocks)[static_cast<std::size_t>(l)].begin(),
                (*in.blocks)[static_cast<std::size_t>(l)].end());
  Partition part(in.dim, std::move(zero), std::move(minus), std::move(plus));

  // smoothed profiles: analytic profiles are their own approximants
  std::vector<GridFn> g(static_cast<std::size_t>(m));
  bool smoothed = false;
  double w = budget.w_h;
  for (;;) {
    for (int l = 0; l < m; ++l) {
      const GridFn& prof = (*in.h)[static_cast<std::size_t>(l)];
      if (prof.has_deriv() && prof.deriv_analytic()) {
        g[static_cast<std::size_t>(l)] = prof;
      } else {
        g[static_cast<std::size_t>(l)] = mollify(prof, w, false);
        smoothed = true;
      }
    }
    double sep = std::numeric_limits<double>::infinity();
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b)
        for (int j = 0; j <= n; ++j)
          sep = std::min(sep, std::abs(g[static_cast<std::size_t>(a)].scalar_at(j) -
                                       g[static_cast<std::size_t>(b)].scalar_at(j)));
    if (m == 1 || sep >= budget.sep_target) break;
    if (!smoothed || w <= budget.width_floor)
      fail(ErrorKind::separation_destroyed,
           "profile separation below " + std::to_string(budget.sep_target) + " after smoothing");
    w *= 0.5;
  }

  std::vector<SpectralAtom> atoms;
  atoms.reserve(static_cast<std::size_t>(m));
  for (int l = 0; l < m; ++l) {
    std::vector<cd> beta(static_cast<std::size_t>(n + 1));
    std::vector<cd> beta_d(static_cast<std::size_t>(n + 1));
    const GridFn& gl = g[static_cast<std::size_t>(l)];
    const GridFn& gk = g[static_cast<std::size_t>(in.k)];
    for (int j = 0; j <= n; ++j) {
      beta[static_cast<std::size_t>(j)] = in.d * (gl.scalar_at(j) - gk.scalar_at(j));
      beta_d[static_cast<std::size_t>(j)] = in.d * (gl.deriv_at(j)[0] - gk.deriv_at(j)[0]);
    }
    SpectralAtom atom{GridFn::from_samples(GridFn::Kind::scalar, 1, std::move(beta), std::move(beta_d), true),
                      (*in.blocks)[static_cast<std::size_t>(l)], l < in.k ? 1 : (l == in.k ? 0 : 2)};
    atoms.push_back(std::move(atom));
  }
  SpectralAtoms b(in.dim, std::move(atoms), part);

  GridFn c = mollify(*in.v, budget.w_v, true);
  const double cnorm = norm_c(c);

  PiFrame frame = PiFrame::make(part, std::move(b), std::move(c), false);
  IndexFrame out{std::move(frame), GridFn(), 0.0, false, 0.0, 0.0, 0.0};
  out.smallness_ok = out.frame.smallness_ok;
  const double sep_unit = std::isfinite(out.frame.d_atom) ? out.frame.d_atom / std::abs(in.d)
                                                          : std::numeric_limits<double>::infinity();
  out.min_magnitude = sep_unit > 0.0 && std::isfinite(sep_unit)
                          ? 8.0 * in.dim * cnorm / sep_unit
                          : 0.0;
  if (!out.smallness_ok && !permissive)
    fail(ErrorKind::magnitude_too_small,
         "frame smallness needs magnitude >= " + std::to_string(out.min_magnitude));

  GridFn diff = *in.v;
  diff -= out.frame.c;
  out.epsilon_v = norm_l1(diff);
  double alpha = 0.0, betamax = 0.0;
  for (int j = 0; j <= n; ++j) {
    const double wj = (j == 0 || j == n) ? 0.5 : 1.0;
    alpha += wj * out.frame.c.point_deriv_norm(j);
  }
  out.alpha = alpha / n;
  for (int l = 0; l < m; ++l) {
    double acc = 0.0;
    for (int j = 0; j <= n; ++j) {
      const double wj = (j == 0 || j == n) ? 0.5 : 1.0;
      acc += wj * std::abs(g[static_cast<std::size_t>(l)].deriv_at(j)[0]);
    }
    betamax = std::max(betamax, acc / n);
  }
  out.beta = betamax;
  return out;
}

GridFn shift_by_profile(const GridFn& a, const GridFn& hk, cd d) {
  GridFn out = a;
  const int dim = a.dim();
  for (int j = 0; j <= a.grid_n(); ++j) {
    const cd s = d * hk.scalar_at(j);
    auto v = out.at(j);
    for (int i = 0; i < dim; ++i) v[static_cast<std::size_t>(i) * dim + i] -= s;
  }
  return out;
}

// Block-factored Green kernel of a block-diagonal dichotomous system in
// shifted coordinates.  Fundamental matrices are kept as exp(phi) * N with
// phi the scalar shifted exponent and N bounded.
class BlockKernel {
 public:
  BlockKernel(const GridFn& base, const std::vector<std::vector<int>>& blocks,
              const std::vector<GridFn>& h, cd d, int k, Side side)
      : dim_(base.dim()), n_(base.grid_n()) {
    const int m = static_cast<int>(blocks.size());
    blocks_.resize(static_cast<std::size_t>(m));
    for (int l = 0; l < m; ++l) {
      Block& blk = blocks_[static_cast<std::size_t>(l)];
      blk.idx = blocks[static_cast<std::size_t>(l)];
      blk.pinned_left = side == Side::left ? l <= k : l < k;
      const int bd = static_cast<int>(blk.idx.size());
      // mu = d (h_l - h_k); phi = cumulative integral
      std::vector<cd> mu(static_cast<std::size_t>(n_ + 1));
      for (int j = 0; j <= n_; ++j)
        mu[static_cast<std::size_t>(j)] =
            d * (h[static_cast<std::size_t>(l)].scalar_at(j) - h[static_cast<std::size_t>(k)].scalar_at(j));
      blk.phi.assign(static_cast<std::size_t>(n_ + 1), cd(0.0, 0.0));
      for (int j = 1; j <= n_; ++j)
        blk.phi[static_cast<std::size_t>(j)] =
            blk.phi[static_cast<std::size_t>(j - 1)] +
            0.5 / n_ * (mu[static_cast<std::size_t>(j - 1)] + mu[static_cast<std::size_t>(j)]);
      // bounded remainder: block coefficient minus mu I
      GridFn btilde = GridFn::zeros(GridFn::Kind::matrix, n_, bd);
      for (int j = 0; j <= n_; ++j) {
        auto out = btilde.at(j);
        const auto src = base.at(j);
        for (int r = 0; r < bd; ++r)
          for (int c = 0; c < bd; ++c)
            out[static_cast<std::size_t>(r) * bd + c] =
                src[static_cast<std::size_t>(blk.idx[static_cast<std::size_t>(r)]) * dim_ +
                    blk.idx[static_cast<std::size_t>(c)]] -
                (r == c ? mu[static_cast<std::size_t>(j)] : cd(0.0, 0.0));
      }
      const GridFn nfun = fundamental_matrix(btilde);
      blk.n.reserve(static_cast<std::size_t>(n_ + 1));
      blk.n_lu.reserve(static_cast<std::size_t>(n_ + 1));
      for (int j = 0; j <= n_; ++j) {
        blk.n.push_back(nfun.matrix_at(j));
        blk.n_lu.emplace_back(blk.n.back());
        if (blk.n_lu.back().singular())
          fail(ErrorKind::step_failure, "bounded block factor became singular");
      }
    }
  }

  CMatrix p_bc() const {
    CMatrix p(dim_);
    for (const Block& blk : blocks_)
      if (blk.pinned_left)
        for (int i : blk.idx) p(i, i) = 1.0;
    return p;
  }

  // solution of the base problem with componentwise boundary values xi
  GridFn base_solution(const CVector& xi) const {
    GridFn x = GridFn::zeros(GridFn::Kind::vector, n_, dim_);
    for (const Block& blk : blocks_) {
      const int bd = static_cast<int>(blk.idx.size());
      CVector xb(bd);
      bool nonzero = false;
      for (int r = 0; r < bd; ++r) {
        xb[r] = xi[blk.idx[static_cast<std::size_t>(r)]];
        nonzero = nonzero || std::abs(xb[r]) > 0.0;
      }
      if (!nonzero) continue;
      if (!blk.pinned_left) xb = blk.n_lu.back().solve(xb);
      for (int j = 0; j <= n_; ++j) {
        const cd logf = blk.pinned_left
                            ? blk.phi[static_cast<std::size_t>(j)]
                            : blk.phi[static_cast<std::size_t>(j)] - blk.phi[static_cast<std::size_t>(n_)];
        const cd scale = guarded_exp(logf);
        CVector val = blk.n[static_cast<std::size_t>(j)].apply(xb);
        auto out = x.at(j);
        for (int r = 0; r < bd; ++r)
          out[static_cast<std::size_t>(blk.idx[static_cast<std::size_t>(r)])] = scale * val[r];
      }
    }
    return x;
  }

  // integral of the Green kernel against g, block by block
  GridFn apply_kernel(const GridFn& g) const {
    GridFn out = GridFn::zeros(GridFn::Kind::vector, n_, dim_);
    const double h = 1.0 / n_;
    for (const Block& blk : blocks_) {
      const int bd = static_cast<int>(blk.idx.size());
      std::vector<CVector> u(static_cast<std::size_t>(n_ + 1), CVector(bd));
      for (int j = 0; j <= n_; ++j) {
        CVector gb(bd);
        const auto gv = g.at(j);
        for (int r = 0; r < bd; ++r) gb[r] = gv[static_cast<std::size_t>(blk.idx[static_cast<std::size_t>(r)])];
        u[static_cast<std::size_t>(j)] = blk.n_lu[static_cast<std::size_t>(j)].solve(gb);
      }
      // z_j accumulates the exponent-weighted integral up to / past t_j
      std::vector<CVector> z(static_cast<std::size_t>(n_ + 1), CVector(bd));
      if (blk.pinned_left) {
        // z_j = f z_{j-1} + h/2 (f u_{j-1} + u_j),  f = exp(phi_j - phi_{j-1})
        for (int j = 1; j <= n_; ++j) {
          const cd f = guarded_exp(blk.phi[static_cast<std::size_t>(j)] - blk.phi[static_cast<std::size_t>(j - 1)]);
          CVector half = u[static_cast<std::size_t>(j - 1)];
          half *= f;
          half += u[static_cast<std::size_t>(j)];
          half *= cd(0.5 * h, 0.0);
          CVector zj = z[static_cast<std::size_t>(j - 1)];
          zj *= f;
          zj += half;
          z[static_cast<std::size_t>(j)] = zj;
        }
      } else {
        // tail integral: z_j = f z_{j+1} + h/2 (u_j + f u_{j+1}),  f = exp(phi_j - phi_{j+1})
        for (int j = n_ - 1; j >= 0; --j) {
          const cd f = guarded_exp(blk.phi[static_cast<std::size_t>(j)] - blk.phi[static_cast<std::size_t>(j + 1)]);
          CVector zj = z[static_cast<std::size_t>(j + 1)];
          zj *= f;
          CVector half = u[static_cast<std::size_t>(j + 1)];
          half *= f;
          half += u[static_cast<std::size_t>(j)];
          half *= cd(0.5 * h, 0.0);
          zj += half;
          z[static_cast<std::size_t>(j)] = zj;
        }
      }
      for (int j = 0; j <= n_; ++j) {
        CVector val = blk.n[static_cast<std::size_t>(j)].apply(z[static_cast<std::size_t>(j)]);
        if (!blk.pinned_left) val *= cd(-1.0, 0.0);  // the past-t kernel piece carries a minus sign
        auto ov = out.at(j);
        for (int r = 0; r < bd; ++r)
          ov[static_cast<std::size_t>(blk.idx[static_cast<std::size_t>(r)])] = val[r];
      }
    }
    return out;
  }

 private:
  struct Block {
    std::vector<int> idx;
    bool pinned_left = true;
    std::vector<cd> phi;
    std::vector<CMatrix> n;
    std::vector<Lu> n_lu;
  };
  int dim_;
  int n_;
  std::vector<Block> blocks_;
};

}  // namespace

IndexFrame build_frame_for_index(const ParamFamily& fam, int nu, int k, const FrameBudget& budget,
                                 bool permissive) {
  fam.validate();
  IndexFrameInputs in{fam.dim, &fam.blocks, &fam.h, &fam.v, fam.d(nu), k};
  IndexFrame out = build_index_frame_impl(in, budget, permissive);
  out.shifted = shift_by_profile(assemble(fam, nu), fam.h[static_cast<std::size_t>(k)], fam.d(nu));
  return out;
}

GridFn ScaledSolution::materialize() const {
  GridFn out = y;
  for (int j = 0; j <= y.grid_n(); ++j) {
    const cd f = guarded_exp(log_factor[static_cast<std::size_t>(j)]);
    kernels::active().scale(f, out.at(j).data(), out.at(j).data(), out.stride());
  }
  return out;
}

double ScaledSolution::point_norm_actual(int j) const {
  const double lr = log_factor[static_cast<std::size_t>(j)].real();
  if (lr > 700.0) fail(ErrorKind::step_failure, "solution scale exceeds the double range");
  return std::exp(lr) * y.point_norm(j);
}

double ScaledSolution::norm_c_actual() const {
  double m = 0.0;
  for (int j = 0; j <= y.grid_n(); ++j) m = std::max(m, point_norm_actual(j));
  return m;
}

StructuredResult solve_structured(const StructuredProblem& prob, const SolveOptions& opts) {
  const int dim = prob.dim;
  const int m = static_cast<int>(prob.blocks.size());
  const std::vector<int> member = membership_of(dim, prob.blocks);
  if (prob.k < 0 || prob.k >= m) fail(ErrorKind::invalid_input, "block index out of range");
  if (prob.xi.dim() != dim) fail(ErrorKind::invalid_input, "boundary value dimension mismatch");
  double xi_norm = prob.xi.norm();
  if (!(xi_norm > 0.0)) fail(ErrorKind::invalid_input, "boundary value must be nonzero");
  for (int i = 0; i < dim; ++i)
    if (member[static_cast<std::size_t>(i)] != prob.k && std::abs(prob.xi[i]) > 1e-12 * xi_norm)
      fail(ErrorKind::contract_violation, "boundary value must lie in the range of the selected block");

  // profile separation (normalized families keep pairwise gaps >= 1)
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b)
      for (int j = 0; j <= prob.v.grid_n(); ++j)
        if (std::abs(prob.h[static_cast<std::size_t>(a)].scalar_at(j) -
                     prob.h[static_cast<std::size_t>(b)].scalar_at(j)) < 1.0 - 1e-9)
          fail(ErrorKind::contract_violation, "profile separation below 1");

  // assembled and shifted coefficients
  ParamFamily local;
  local.dim = dim;
  local.blocks = prob.blocks;
  local.h = prob.h;
  local.v = prob.v;
  local.direction = prob.d / std::abs(prob.d);
  local.magnitudes = {std::abs(prob.d)};
  const GridFn a_full = assemble(local, 0);
  const GridFn a_shifted = shift_by_profile(a_full, prob.h[static_cast<std::size_t>(prob.k)], prob.d);

  StructuredResult res;
  GridFn coeff = a_shifted;  // the system the Picard iteration solves
  std::optional<TransformerBundle> bundle;
  if (opts.use_transformer) {
    try {
      IndexFrameInputs in{dim, &prob.blocks, &prob.h, &prob.v, prob.d, prob.k};
      IndexFrame inf = build_index_frame_impl(in, opts.budget, true);
      TransformerOptions topts;
      topts.contour_points = opts.contour_points;
      topts.threads = opts.threads;
      bundle = build_transformer(inf.frame, topts);
      coeff = conjugate(*bundle, a_shifted).first;
      GridFn dev = coeff;
      dev -= inf.frame.partition.delta(a_shifted);
      res.transformed_l1 = norm_l1(dev);
      res.transformer_used = true;
    } catch (const Error&) {
      bundle.reset();
      coeff = a_shifted;  // fall back to the plain splitting
      res.transformer_used = false;
    }
  }

  GridFn base = block_diagonal_part(coeff, member);
  GridFn r = coeff;
  r -= base;

  BlockKernel kernel(base, prob.blocks, prob.h, prob.d, prob.k, prob.side);
  const CMatrix p_bc = kernel.p_bc();
  const double worst = dichotomy_worst(base, p_bc);
  if (worst > 27.0) fail(ErrorKind::contract_violation, "dichotomy margin too weak");
  res.gamma = std::exp(-worst);
  res.r_l1 = norm_l1(r);
  res.theta = res.r_l1 / res.gamma;
  if (res.theta > opts.theta_limit)
    fail(ErrorKind::divergence,
         "perturbation too large for the contraction (theta = " + std::to_string(res.theta) + ")");

  const GridFn x0 = kernel.base_solution(prob.xi);
  const double x0_scale = std::max(1.0, norm_c(x0));
  GridFn x = x0;
  for (int it = 1;; ++it) {
    GridFn g = apply_nodes(r, x);
    GridFn xn = kernel.apply_kernel(g);
    xn += x0;
    GridFn diff = xn;
    diff -= x;
    const double delta = norm_c(diff);
    x = std::move(xn);
    res.iterations = it;
    if (delta <= opts.tol * x0_scale) break;
    if (it >= opts.max_iters) fail(ErrorKind::divergence, "structured solve did not converge");
  }
  if (res.transformer_used) x = apply_nodes(bundle->s, x);

  // diagonal-model solution in the same shifted coordinates
  BlockKernel model_kernel(block_diagonal_part(a_shifted, member), prob.blocks, prob.h, prob.d, prob.k,
                           prob.side);
  GridFn xm = model_kernel.base_solution(prob.xi);

  double rel = 0.0;
  for (int j = 0; j <= x.grid_n(); ++j) {
    const double den = xm.point_norm(j);
    if (den < 1e-250) fail(ErrorKind::no_unique_solution, "model solution vanished at a node");
    double num = 0.0;
    const auto xv = x.at(j);
    const auto mv = xm.at(j);
    for (std::size_t c = 0; c < x.stride(); ++c) num += std::norm(xv[c] - mv[c]);
    rel = std::max(rel, std::sqrt(num) / den);
  }
  res.rel_sup_error = rel;

  // log factors relative to the pinned end of block k
  std::vector<cd> phik = cumulative(prob.h[static_cast<std::size_t>(prob.k)], prob.d);
  const int anchor = prob.side == Side::left ? 0 : x.grid_n();
  const cd off = phik[static_cast<std::size_t>(anchor)];
  for (cd& p : phik) p -= off;
  res.full = ScaledSolution{std::move(x), phik};
  res.model = ScaledSolution{std::move(xm), res.full.log_factor};
  return res;
}

CompareResult asymptotic_compare(const ParamFamily& fam, int nu, int k, const CVector& xi, Side side,
                                 const SolveOptions& opts) {
  fam.validate();
  StructuredProblem prob{fam.dim, fam.blocks, fam.h, fam.v, fam.d(nu), k, side, xi};
  StructuredResult stats = solve_structured(prob, opts);
  CompareResult out;
  out.rel_sup_error = stats.rel_sup_error;
  out.x_full = stats.full.materialize();
  out.x_model = stats.model.materialize();
  out.stats = std::move(stats);
  return out;
}

RefineResult refine(const ParamFamily& fam, int nu, int k, const CVector& xi, const SolveOptions& opts) {
  fam.validate();
  const cd d = fam.d(nu);
  const std::vector<int> member = membership_of(fam.dim, fam.blocks);
  StructuredProblem prob{fam.dim, fam.blocks, fam.h, fam.v, d, k, Side::left, xi};
  const StructuredResult stats = solve_structured(prob, opts);

  // correction problem: y' = A_0 y + (A - A_0) x_0, homogeneous boundary data
  const GridFn a_shifted_base =
      block_diagonal_part(shift_by_profile(assemble(fam, nu), fam.h[static_cast<std::size_t>(k)], d), member);
  BlockKernel kernel(a_shifted_base, fam.blocks, fam.h, d, k, Side::left);
  GridFn roff = fam.v;
  roff -= block_diagonal_part(fam.v, member);
  const GridFn forcing = apply_nodes(roff, stats.model.y);
  GridFn ytil = kernel.apply_kernel(forcing);

  RefineResult out;
  out.gamma = stats.gamma;
  out.epsilon_used = stats.transformer_used ? stats.transformed_l1 : stats.r_l1;

  double gap = 0.0, ynorm = 0.0;
  for (int j = 0; j <= ytil.grid_n(); ++j) {
    const double lr = stats.full.log_factor[static_cast<std::size_t>(j)].real();
    if (lr > 700.0) fail(ErrorKind::step_failure, "solution scale exceeds the double range");
    const double scale = std::exp(lr);
    double num = 0.0;
    const auto xv = stats.full.y.at(j);
    const auto mv = stats.model.y.at(j);
    for (std::size_t c = 0; c < stats.full.y.stride(); ++c) num += std::norm(xv[c] - mv[c]);
    gap = std::max(gap, scale * std::sqrt(num));
    ynorm = std::max(ynorm, scale * ytil.point_norm(j));
  }
  out.actual_gap = gap;
  out.y_norm_c = ynorm;
  out.refined_bound = (1.0 + (1.0 / out.gamma + out.epsilon_used) * norm_l1(roff)) * ynorm;

  ScaledSolution ysc{std::move(ytil), stats.full.log_factor};
  out.y = ysc.materialize();
  return out;
}

}  // namespace diagode
