#include "diagode/frame.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "diagode/kernels.hpp"
#include "diagode/parallel.hpp"

namespace diagode {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Partition::Partition(int dim, std::vector<int> zero, std::vector<int> minus, std::vector<int> plus)
    : dim_(dim), blocks_{std::move(zero), std::move(minus), std::move(plus)}, membership_(static_cast<std::size_t>(dim), -1) {
  if (dim < 1) fail(ErrorKind::invalid_input, "partition dimension must be positive");
  for (int b = 0; b < 3; ++b) {
    for (int i : blocks_[static_cast<std::size_t>(b)]) {
      if (i < 0 || i >= dim) fail(ErrorKind::invalid_input, "partition index out of range");
      if (membership_[static_cast<std::size_t>(i)] != -1)
        fail(ErrorKind::invalid_input, "partition index sets must be disjoint");
      membership_[static_cast<std::size_t>(i)] = b;
    }
  }
  for (int i = 0; i < dim; ++i)
    if (membership_[static_cast<std::size_t>(i)] == -1)
      fail(ErrorKind::invalid_input, "partition index sets must cover every index");
}

CMatrix Partition::projector(int b) const {
  CMatrix p(dim_);
  for (int i : blocks_[static_cast<std::size_t>(b)]) p(i, i) = 1.0;
  return p;
}

CMatrix Partition::delta(const CMatrix& a) const {
  if (a.dim() != dim_) fail(ErrorKind::invalid_input, "partition/matrix dimension mismatch");
  CMatrix r(dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j)
      if (block_of(i) == block_of(j)) r(i, j) = a(i, j);
  return r;
}

GridFn Partition::delta(const GridFn& a) const {
  if (a.kind() != GridFn::Kind::matrix || a.dim() != dim_)
    fail(ErrorKind::invalid_input, "partition/grid function mismatch");
  GridFn r = a;
  const int d = dim_;
  for (int j = 0; j <= a.grid_n(); ++j) {
    auto v = r.at(j);
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k)
        if (block_of(i) != block_of(k)) v[static_cast<std::size_t>(i) * d + k] = 0.0;
  }
  return r;
}

SpectralAtoms::SpectralAtoms(int dim, std::vector<SpectralAtom> atoms, const Partition& part)
    : dim_(dim), atoms_(std::move(atoms)), atom_of_index_(static_cast<std::size_t>(dim), -1) {
  if (part.dim() != dim) fail(ErrorKind::invalid_input, "atoms/partition dimension mismatch");
  if (atoms_.empty()) fail(ErrorKind::invalid_input, "at least one spectral atom is required");
  grid_n_ = atoms_.front().beta.grid_n();
  for (std::size_t a = 0; a < atoms_.size(); ++a) {
    const SpectralAtom& atom = atoms_[a];
    if (atom.beta.kind() != GridFn::Kind::scalar || atom.beta.grid_n() != grid_n_)
      fail(ErrorKind::invalid_input, "atom profiles must be scalar functions on a common grid");
    if (atom.block < 0 || atom.block > 2) fail(ErrorKind::invalid_input, "atom block out of range");
    if (atom.indices.empty()) fail(ErrorKind::invalid_input, "atom must own at least one index");
    for (int i : atom.indices) {
      if (i < 0 || i >= dim) fail(ErrorKind::invalid_input, "atom index out of range");
      if (part.block_of(i) != atom.block)
        fail(ErrorKind::invalid_input, "atom indices must lie inside its partition block");
      if (atom_of_index_[static_cast<std::size_t>(i)] != -1)
        fail(ErrorKind::invalid_input, "atom index sets must be disjoint");
      atom_of_index_[static_cast<std::size_t>(i)] = static_cast<int>(a);
    }
  }
  for (int i = 0; i < dim; ++i)
    if (atom_of_index_[static_cast<std::size_t>(i)] == -1)
      fail(ErrorKind::invalid_input, "atom index sets must cover every index");
}

cd SpectralAtoms::diag_entry(int index, int j) const {
  return atoms_[static_cast<std::size_t>(atom_of_index_[static_cast<std::size_t>(index)])].beta.scalar_at(j);
}

CMatrix SpectralAtoms::value_at(int j) const {
  CMatrix b(dim_);
  for (int i = 0; i < dim_; ++i) b(i, i) = diag_entry(i, j);
  return b;
}

double SpectralAtoms::deriv_norm_at(int j) const {
  double m = 0.0;
  for (const SpectralAtom& atom : atoms_) {
    if (!atom.beta.has_deriv())
      fail(ErrorKind::contract_violation, "atom profile lacks derivative samples");
    m = std::max(m, std::abs(atom.beta.deriv_at(j)[0]));
  }
  return m;
}

GridFn SpectralAtoms::to_gridfn() const {
  GridFn b = GridFn::zeros(GridFn::Kind::matrix, grid_n_, dim_);
  for (int j = 0; j <= grid_n_; ++j) {
    auto v = b.at(j);
    for (int i = 0; i < dim_; ++i) v[static_cast<std::size_t>(i) * dim_ + i] = diag_entry(i, j);
  }
  return b;
}

GapResult gap(const SpectralAtoms& b, const Partition& part) {
  GapResult r;
  r.d_pi = kInf;
  r.d_atom = kInf;
  r.single_atom = b.atoms().size() == 1;
  const auto& atoms = b.atoms();
  for (std::size_t a1 = 0; a1 < atoms.size(); ++a1) {
    for (std::size_t a2 = a1 + 1; a2 < atoms.size(); ++a2) {
      double lo = kInf;
      for (int j = 0; j <= b.grid_n(); ++j)
        lo = std::min(lo, std::abs(atoms[a1].beta.scalar_at(j) - atoms[a2].beta.scalar_at(j)));
      r.d_atom = std::min(r.d_atom, lo);
      if (atoms[a1].block != atoms[a2].block) r.d_pi = std::min(r.d_pi, lo);
    }
  }
  (void)part;
  return r;
}

PiFrame PiFrame::make(Partition partition, SpectralAtoms b, GridFn c, bool enforce_smallness) {
  if (c.kind() != GridFn::Kind::matrix || c.dim() != partition.dim() || c.grid_n() != b.grid_n())
    fail(ErrorKind::invalid_input, "frame perturbation must be a matrix function on the atom grid");
  const double scale = std::max(1.0, norm_c(c));
  if (c.point_norm(0) > 1e-12 * scale || c.point_norm(c.grid_n()) > 1e-12 * scale)
    fail(ErrorKind::invalid_input, "frame perturbation must vanish at the endpoints");
  const GapResult g = gap(b, partition);
  PiFrame f{std::move(partition), std::move(b), std::move(c), g.d_pi, g.d_atom, false};
  const double cnorm = norm_c(f.c);
  f.smallness_ok = cnorm < f.smallness_bound();
  if (enforce_smallness && !f.smallness_ok)
    fail(ErrorKind::contract_violation,
         "frame smallness violated: norm_c(C) = " + std::to_string(cnorm) +
             " >= " + std::to_string(f.smallness_bound()));
  // Even in permissive mode the contours must clear the spectrum of B+C.
  if (std::isfinite(f.d_atom) && cnorm >= 0.45 * f.d_atom)
    fail(ErrorKind::contract_violation, "perturbation too large for atom contours");
  return f;
}

double PiFrame::effective_gap() const { return d_atom; }

double PiFrame::smallness_bound() const {
  if (!std::isfinite(d_atom)) return kInf;
  return d_atom / (8.0 * partition.dim());
}

namespace {

// radius of the per-atom contour circles
double contour_radius(const PiFrame& f) {
  if (std::isfinite(f.d_atom)) return 0.5 * f.d_atom;
  return 1.0 + 2.0 * norm_c(f.c);  // lone atom: any circle enclosing spec(B+C)
}

std::array<CMatrix, 3> riesz_at(const PiFrame& f, int j, int contour_points, double radius) {
  const int dim = f.partition.dim();
  const int nc = contour_points;
  std::array<CMatrix, 3> q{CMatrix(dim), CMatrix(dim), CMatrix(dim)};
  CMatrix base(dim);
  for (int i = 0; i < dim; ++i) base(i, i) = f.b.diag_entry(i, j);
  const auto cspan = f.c.at(j);
  for (int i = 0; i < dim; ++i)
    for (int k = 0; k < dim; ++k) base(i, k) += cspan[static_cast<std::size_t>(i) * dim + k];

  for (const SpectralAtom& atom : f.b.atoms()) {
    const cd center = atom.beta.scalar_at(j);
    CMatrix acc(dim);
    for (int p = 0; p < nc; ++p) {
      const double theta = 2.0 * M_PI * p / nc;
      const cd w = std::polar(1.0, theta);
      const cd z = center + radius * w;
      CMatrix m = base;
      for (int i = 0; i < dim; ++i) m(i, i) -= z;
      Lu lu(m);
      if (lu.singular())
        fail(ErrorKind::contour_hits_spectrum,
             "resolvent singular on an atom contour (frame invariants violated)");
      CMatrix r = lu.inverse();
      r *= w;
      acc += r;
    }
    acc *= cd(-radius / nc, 0.0);
    q[static_cast<std::size_t>(atom.block)] += acc;
  }
  return q;
}

double dev_from_identity(const CMatrix& m) {
  CMatrix d = m;
  d -= CMatrix::identity(m.dim());
  return op_norm(d);
}

}  // namespace

std::array<CMatrix, 3> riesz_projectors(const PiFrame& f, int t_index, const RieszOptions& opts) {
  auto q = riesz_at(f, t_index, opts.contour_points, contour_radius(f));
  CMatrix sum = q[0];
  sum += q[1];
  sum += q[2];
  if (dev_from_identity(sum) > 1e-6)
    fail(ErrorKind::contract_violation, "contour projectors do not sum to the identity");
  return q;
}

double kappa(const PiFrame& f) {
  if (!f.c.has_deriv())
    fail(ErrorKind::contract_violation, "kappa needs derivative samples of the perturbation");
  const int n = f.c.grid_n();
  const double d = f.effective_gap();
  double acc = 0.0;
  for (int j = 0; j <= n; ++j) {
    const double w = (j == 0 || j == n) ? 0.5 : 1.0;
    const double cn = f.c.point_norm(j);
    const double bdot = f.b.deriv_norm_at(j);
    const double cdot = f.c.point_deriv_norm(j);
    acc += w * (6.0 * cn * bdot + (4.0 * cn + d) * cdot);
  }
  return acc / n;
}

TransformerBundle build_transformer(const PiFrame& f, const TransformerOptions& opts) {
  const int dim = f.partition.dim();
  const int n = f.c.grid_n();
  const double radius = contour_radius(f);
  const double d = f.effective_gap();

  GridFn s = GridFn::zeros(GridFn::Kind::matrix, n, dim);
  GridFn s_inv = GridFn::zeros(GridFn::Kind::matrix, n, dim);
  std::vector<double> qdev(static_cast<std::size_t>(n + 1), 0.0);

  parallel_for(n + 1, opts.threads, [&](int j) {
    const auto q = riesz_at(f, j, opts.contour_points, radius);
    CMatrix sum = q[0];
    sum += q[1];
    sum += q[2];
    qdev[static_cast<std::size_t>(j)] = dev_from_identity(sum);
    // S = Q0 P0 + Q- P- + Q+ P+: column i comes from the block owning i
    CMatrix sj(dim);
    for (int i = 0; i < dim; ++i) {
      const auto& qb = q[static_cast<std::size_t>(f.partition.block_of(i))];
      for (int r = 0; r < dim; ++r) sj(r, i) = qb(r, i);
    }
    Lu lu(sj);
    if (lu.singular()) fail(ErrorKind::contract_violation, "transformer value not invertible");
    s.set_node(j, sj);
    s_inv.set_node(j, lu.inverse());
  });

  BoundReport rep;
  rep.slack = opts.slack;
  rep.d_used = d;
  rep.kappa = kappa(f);
  rep.q_sum_dev = *std::max_element(qdev.begin(), qdev.end());
  if (rep.q_sum_dev > 1e-6)
    fail(ErrorKind::contract_violation, "contour projectors do not sum to the identity");
  rep.s_end_dev = std::max(dev_from_identity(s.matrix_at(0)), dev_from_identity(s.matrix_at(n)));

  const double fin_d = std::isfinite(d) ? d : 1.0;  // lone atom: bounds are trivial, avoid inf/inf
  auto track = [&](EqBound& eq, double lhs, double rhs) {
    if (lhs - rhs > eq.lhs - eq.rhs || (eq.lhs == 0.0 && eq.rhs == 0.0)) {
      eq.lhs = lhs;
      eq.rhs = rhs;
    }
  };
  for (int j = 0; j <= n; ++j) {
    const double cn = f.c.point_norm(j);
    const CMatrix sj = s.matrix_at(j);
    const CMatrix sij = s_inv.matrix_at(j);
    track(rep.transformer_dev, dev_from_identity(sj), 4.0 * dim / fin_d * cn);
    track(rep.inverse_dev, dev_from_identity(sij), 8.0 * dim / fin_d * cn);
    CMatrix bc(dim);
    for (int i = 0; i < dim; ++i) bc(i, i) = f.b.diag_entry(i, j);
    bc += f.c.matrix_at(j);
    CMatrix conj = sij * (bc * sj);
    conj -= f.partition.delta(bc);
    track(rep.conjugation, op_norm(conj), 8.0 * dim / fin_d * cn * cn);
  }
  rep.sdot_l1 = {norm_l1(derivative(s)), 4.0 * dim / (fin_d * fin_d) * rep.kappa, true};

  auto finish = [&](EqBound& eq, const char* name) {
    eq.ok = eq.lhs <= eq.rhs * (1.0 + opts.slack) + 1e-12;
    if (!eq.ok && opts.strict)
      fail(ErrorKind::bound_violation, std::string("transformer bound failed: ") + name);
  };
  finish(rep.transformer_dev, "transformer deviation");
  finish(rep.inverse_dev, "inverse deviation");
  finish(rep.sdot_l1, "derivative L1");
  finish(rep.conjugation, "conjugation");

  return TransformerBundle{std::move(s), std::move(s_inv), rep};
}

std::pair<GridFn, std::optional<GridFn>> conjugate(const GridFn& s, const GridFn& s_inv,
                                                   const GridFn& a, const GridFn* f) {
  if (!s.same_shape(s_inv) || !s.same_shape(a))
    fail(ErrorKind::invalid_input, "conjugation shape mismatch");
  const GridFn sdot = derivative(s);
  const int dim = a.dim();
  const std::size_t nd = static_cast<std::size_t>(dim);
  GridFn a_new = GridFn::zeros(GridFn::Kind::matrix, a.grid_n(), dim);
  std::vector<cd> tmp(nd * nd), tmp2(nd * nd);
  const auto& k = kernels::active();
  for (int j = 0; j <= a.grid_n(); ++j) {
    k.matmul(a.at(j).data(), s.at(j).data(), tmp.data(), nd);       // A S
    k.matmul(s_inv.at(j).data(), tmp.data(), tmp2.data(), nd);      // S^-1 A S
    k.matmul(s_inv.at(j).data(), sdot.at(j).data(), tmp.data(), nd);  // S^-1 S'
    k.sub(tmp2.data(), tmp.data(), a_new.at(j).data(), nd * nd);
  }
  std::optional<GridFn> f_new;
  if (f) {
    if (f->kind() != GridFn::Kind::vector || f->dim() != dim || f->grid_n() != a.grid_n())
      fail(ErrorKind::invalid_input, "forcing shape mismatch");
    f_new = apply_nodes(s_inv, *f);
  }
  return {std::move(a_new), std::move(f_new)};
}

std::pair<GridFn, std::optional<GridFn>> conjugate(const TransformerBundle& bundle, const GridFn& a,
                                                   const GridFn* f) {
  return conjugate(bundle.s, bundle.s_inv, a, f);
}

ConjugationEstimate conjugation_estimate(const PiFrame& f, const TransformerBundle& bundle,
                                         const GridFn& a, double slack) {
  if (a.kind() != GridFn::Kind::matrix || a.dim() != f.partition.dim() || a.grid_n() != f.c.grid_n())
    fail(ErrorKind::invalid_input, "conjugation estimate shape mismatch");
  const int n = a.grid_n();
  const int dim = a.dim();
  const std::size_t nd = static_cast<std::size_t>(dim);
  const double d = std::isfinite(f.effective_gap()) ? f.effective_gap() : 1.0;
  const auto& k = kernels::active();
  std::vector<cd> tmp(nd * nd), tmp2(nd * nd);
  double lhs = 0.0, off_l1 = 0.0, weighted = 0.0;
  for (int j = 0; j <= n; ++j) {
    const double w = (j == 0 || j == n) ? 0.5 : 1.0;
    k.matmul(a.at(j).data(), bundle.s.at(j).data(), tmp.data(), nd);
    k.matmul(bundle.s_inv.at(j).data(), tmp.data(), tmp2.data(), nd);
    const CMatrix aj = a.matrix_at(j);
    const CMatrix daj = f.partition.delta(aj);
    CMatrix g(dim);
    std::copy(tmp2.begin(), tmp2.end(), g.data().begin());
    g -= daj;
    lhs += w * op_norm(g);
    CMatrix off = aj;
    off -= daj;
    off_l1 += w * op_norm(off);
    weighted += w * f.c.point_norm(j) * op_norm(daj);
  }
  lhs /= n;
  off_l1 /= n;
  weighted /= n;
  ConjugationEstimate est;
  est.lhs = lhs;
  est.rhs = 3.0 * off_l1 + 16.0 * dim / d * weighted;
  est.ok = est.lhs <= est.rhs * (1.0 + slack) + 1e-12;
  return est;
}

}  // namespace diagode
