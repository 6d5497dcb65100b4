#include "diagode/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "diagode/kernels.hpp"

namespace diagode {

namespace {
inline double abs2(cd z) { return z.real() * z.real() + z.imag() * z.imag(); }
}  // namespace

int CVector::check_dim(int dim) {
  if (dim < 1) fail(ErrorKind::invalid_input, "vector dimension must be positive");
  return dim;
}

CVector CVector::unit(int dim, int k) {
  CVector e(dim);
  if (k < 0 || k >= dim) fail(ErrorKind::invalid_input, "unit vector index out of range");
  e[k] = 1.0;
  return e;
}

double CVector::norm() const { return std::sqrt(kernels::active().sum_sq(v_.data(), v_.size())); }

CVector& CVector::operator+=(const CVector& o) {
  if (o.dim() != dim()) fail(ErrorKind::invalid_input, "vector dimension mismatch");
  kernels::active().add(v_.data(), o.v_.data(), v_.data(), v_.size());
  return *this;
}

CVector& CVector::operator-=(const CVector& o) {
  if (o.dim() != dim()) fail(ErrorKind::invalid_input, "vector dimension mismatch");
  kernels::active().sub(v_.data(), o.v_.data(), v_.data(), v_.size());
  return *this;
}

CVector& CVector::operator*=(cd a) {
  kernels::active().scale(a, v_.data(), v_.data(), v_.size());
  return *this;
}

int CMatrix::check_dim(int dim) {
  if (dim < 1) fail(ErrorKind::invalid_input, "matrix dimension must be positive");
  return dim;
}

CMatrix::CMatrix(int dim, std::initializer_list<cd> rowmajor) : CMatrix(dim) {
  if (rowmajor.size() != a_.size()) fail(ErrorKind::invalid_input, "matrix initializer size mismatch");
  std::copy(rowmajor.begin(), rowmajor.end(), a_.begin());
}

CMatrix CMatrix::identity(int dim) {
  CMatrix m(dim);
  for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

CMatrix CMatrix::diagonal(std::initializer_list<cd> d) {
  CMatrix m(static_cast<int>(d.size()));
  int i = 0;
  for (cd z : d) m(i, i) = z, ++i;
  return m;
}

CMatrix CMatrix::adjoint() const {
  CMatrix r(n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) r(j, i) = std::conj((*this)(i, j));
  return r;
}

CMatrix& CMatrix::operator+=(const CMatrix& o) {
  if (o.n_ != n_) fail(ErrorKind::invalid_input, "matrix dimension mismatch");
  kernels::active().add(a_.data(), o.a_.data(), a_.data(), a_.size());
  return *this;
}

CMatrix& CMatrix::operator-=(const CMatrix& o) {
  if (o.n_ != n_) fail(ErrorKind::invalid_input, "matrix dimension mismatch");
  kernels::active().sub(a_.data(), o.a_.data(), a_.data(), a_.size());
  return *this;
}

CMatrix& CMatrix::operator*=(cd a) {
  kernels::active().scale(a, a_.data(), a_.data(), a_.size());
  return *this;
}

CMatrix operator*(const CMatrix& a, const CMatrix& b) {
  if (a.n_ != b.n_) fail(ErrorKind::invalid_input, "matrix dimension mismatch");
  CMatrix c(a.n_);
  kernels::active().matmul(a.a_.data(), b.a_.data(), c.a_.data(), static_cast<std::size_t>(a.n_));
  return c;
}

CVector CMatrix::apply(const CVector& x) const {
  if (x.dim() != n_) fail(ErrorKind::invalid_input, "matrix/vector dimension mismatch");
  CVector y(n_);
  for (int i = 0; i < n_; ++i) {
    cd acc = 0.0;
    for (int j = 0; j < n_; ++j) acc += (*this)(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

bool all_finite(std::span<const cd> v) {
  for (cd z : v)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

void require_finite(std::span<const cd> v, const char* what) {
  if (!all_finite(v)) fail(ErrorKind::invalid_input, std::string("non-finite entries in ") + what);
}

double max_entry_abs(const CMatrix& a) {
  return kernels::active().max_abs(a.data().data(), a.data().size());
}

double frobenius(const CMatrix& a) {
  return std::sqrt(kernels::active().sum_sq(a.data().data(), a.data().size()));
}

namespace {

// Cyclic two-sided Jacobi for Hermitian matrices; accurate and simple at the
// dimensions in play.
HermEig jacobi_herm(CMatrix h) {
  const int n = h.dim();
  CMatrix v = CMatrix::identity(n);
  const double fro = frobenius(h);
  const double target = 1e-14 * std::max(fro, 1e-300);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += 2.0 * abs2(h(p, q));
    if (std::sqrt(off) <= target) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const cd beta = h(p, q);
        const double ab = std::abs(beta);
        if (ab <= 1e-300) continue;
        const cd u = beta / ab;
        const double alpha = h(p, p).real();
        const double gamma = h(q, q).real();
        const double tau = (alpha - gamma) / (2.0 * ab);
        double t;
        if (tau == 0.0)
          t = 1.0;
        else
          t = (tau > 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const cd su = s * u;
        const cd suc = s * std::conj(u);
        // columns p,q  (H <- H J, V <- V J)
        for (int i = 0; i < n; ++i) {
          const cd hip = h(i, p), hiq = h(i, q);
          h(i, p) = c * hip + suc * hiq;
          h(i, q) = -su * hip + c * hiq;
          const cd vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip + suc * viq;
          v(i, q) = -su * vip + c * viq;
        }
        // rows p,q  (H <- J^H H)
        for (int j = 0; j < n; ++j) {
          const cd hpj = h(p, j), hqj = h(q, j);
          h(p, j) = c * hpj + su * hqj;
          h(q, j) = -suc * hpj + c * hqj;
        }
        h(p, q) = std::conj(h(q, p));
      }
    }
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return h(a, a).real() < h(b, b).real(); });
  HermEig out;
  out.values.resize(static_cast<std::size_t>(n));
  out.vectors = CMatrix(n);
  for (int k = 0; k < n; ++k) {
    out.values[static_cast<std::size_t>(k)] = h(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]).real();
    for (int i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[static_cast<std::size_t>(k)]);
  }
  return out;
}

void require_hermitian(const CMatrix& h) {
  const double scale = std::max(1.0, max_entry_abs(h));
  for (int i = 0; i < h.dim(); ++i)
    for (int j = i; j < h.dim(); ++j)
      if (std::abs(h(i, j) - std::conj(h(j, i))) > 1e-12 * scale)
        fail(ErrorKind::contract_violation, "matrix is not Hermitian within tolerance");
}

}  // namespace

double op_norm(const CMatrix& a) {
  require_finite(a.data(), "op_norm input");
  if (a.dim() == 1) return std::abs(a(0, 0));
  CMatrix g = a.adjoint() * a;
  // symmetrize away multiplication roundoff
  CMatrix gh = g.adjoint();
  g += gh;
  g *= 0.5;
  const HermEig e = jacobi_herm(g);
  return std::sqrt(std::max(0.0, e.values.back()));
}

double omega(const CMatrix& a) {
  require_finite(a.data(), "omega input");
  CMatrix h = a.adjoint();
  h += a;
  h *= 0.5;
  const HermEig e = jacobi_herm(h);
  return e.values.back();
}

cd trace(const CMatrix& a) {
  require_finite(a.data(), "trace input");
  cd t = 0.0;
  for (int i = 0; i < a.dim(); ++i) t += a(i, i);
  return t;
}

std::vector<double> herm_eigs(const CMatrix& h) { return herm_eig_full(h).values; }

HermEig herm_eig_full(const CMatrix& h) {
  require_finite(h.data(), "herm_eigs input");
  require_hermitian(h);
  CMatrix sym = h.adjoint();
  sym += h;
  sym *= 0.5;
  return jacobi_herm(sym);
}

Lu::Lu(const CMatrix& a, double rel_tol) : n_(a.dim()), lu_(a.data().begin(), a.data().end()), piv_(static_cast<std::size_t>(a.dim())) {
  require_finite(a.data(), "linear solve input");
  const double scale = std::max(max_entry_abs(a), 1e-300);
  const double tol = rel_tol * scale;
  for (int k = 0; k < n_; ++k) {
    int pivot = k;
    double best = abs2(lu_[static_cast<std::size_t>(k) * n_ + k]);
    for (int i = k + 1; i < n_; ++i) {
      const double cand = abs2(lu_[static_cast<std::size_t>(i) * n_ + k]);
      if (cand > best) best = cand, pivot = i;
    }
    piv_[static_cast<std::size_t>(k)] = pivot;
    if (pivot != k) {
      for (int j = 0; j < n_; ++j)
        std::swap(lu_[static_cast<std::size_t>(k) * n_ + j], lu_[static_cast<std::size_t>(pivot) * n_ + j]);
      sign_ = -sign_;
    }
    const cd pv = lu_[static_cast<std::size_t>(k) * n_ + k];
    if (std::sqrt(abs2(pv)) < tol) {
      singular_ = true;
      return;
    }
    for (int i = k + 1; i < n_; ++i) {
      cd& lik = lu_[static_cast<std::size_t>(i) * n_ + k];
      lik /= pv;
      const cd m = lik;
      for (int j = k + 1; j < n_; ++j)
        lu_[static_cast<std::size_t>(i) * n_ + j] -= m * lu_[static_cast<std::size_t>(k) * n_ + j];
    }
  }
}

cd Lu::det() const {
  if (singular_) return 0.0;
  cd d = static_cast<double>(sign_);
  for (int k = 0; k < n_; ++k) d *= lu_[static_cast<std::size_t>(k) * n_ + k];
  return d;
}

void Lu::solve_in_place(std::span<cd> x) const {
  if (singular_) fail(ErrorKind::singular_matrix, "singular matrix in linear solve");
  for (int k = 0; k < n_; ++k) {
    const int p = piv_[static_cast<std::size_t>(k)];
    if (p != k) std::swap(x[static_cast<std::size_t>(k)], x[static_cast<std::size_t>(p)]);
    for (int i = k + 1; i < n_; ++i)
      x[static_cast<std::size_t>(i)] -= lu_[static_cast<std::size_t>(i) * n_ + k] * x[static_cast<std::size_t>(k)];
  }
  for (int i = n_ - 1; i >= 0; --i) {
    cd acc = x[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n_; ++j) acc -= lu_[static_cast<std::size_t>(i) * n_ + j] * x[static_cast<std::size_t>(j)];
    x[static_cast<std::size_t>(i)] = acc / lu_[static_cast<std::size_t>(i) * n_ + i];
  }
}

CVector Lu::solve(const CVector& b) const {
  if (b.dim() != n_) fail(ErrorKind::invalid_input, "right-hand side dimension mismatch");
  CVector x = b;
  solve_in_place(x.data());
  return x;
}

CMatrix Lu::solve(const CMatrix& b) const {
  if (b.dim() != n_) fail(ErrorKind::invalid_input, "right-hand side dimension mismatch");
  CMatrix x(n_);
  std::vector<cd> col(static_cast<std::size_t>(n_));
  for (int j = 0; j < n_; ++j) {
    for (int i = 0; i < n_; ++i) col[static_cast<std::size_t>(i)] = b(i, j);
    solve_in_place(col);
    for (int i = 0; i < n_; ++i) x(i, j) = col[static_cast<std::size_t>(i)];
  }
  return x;
}

CMatrix Lu::inverse() const { return solve(CMatrix::identity(n_)); }

CVector solve_linear(const CMatrix& a, const CVector& b) { return Lu(a).solve(b); }
CMatrix solve_linear(const CMatrix& a, const CMatrix& b) { return Lu(a).solve(b); }
CMatrix inverse(const CMatrix& a) { return Lu(a).inverse(); }
cd det(const CMatrix& a) { return Lu(a).det(); }

}  // namespace diagode
