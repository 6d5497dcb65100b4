#include "diagode/gridfn.hpp"

#include <algorithm>
#include <cmath>

#include "diagode/kernels.hpp"

namespace diagode {

namespace {

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void check_grid(int n) {
  if (n < 16 || !power_of_two(n))
    fail(ErrorKind::invalid_input, "grid interval count must be a power of two >= 16");
}

std::size_t stride_for(GridFn::Kind kind, int dim) {
  switch (kind) {
    case GridFn::Kind::scalar:
      return 1;
    case GridFn::Kind::vector:
      return static_cast<std::size_t>(dim);
    case GridFn::Kind::matrix:
      return static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim);
  }
  return 1;
}

}  // namespace

GridFn GridFn::zeros(Kind kind, int grid_n, int dim) {
  check_grid(grid_n);
  if (dim < 1) fail(ErrorKind::invalid_input, "dimension must be positive");
  GridFn f;
  f.kind_ = kind;
  f.n_ = grid_n;
  f.dim_ = kind == Kind::scalar ? 1 : dim;
  f.stride_ = stride_for(kind, f.dim_);
  f.values_.assign(f.stride_ * static_cast<std::size_t>(grid_n + 1), cd(0.0, 0.0));
  return f;
}

GridFn GridFn::from_samples(Kind kind, int dim, std::vector<cd> values,
                            std::optional<std::vector<cd>> deriv, bool deriv_analytic) {
  if (dim < 1) fail(ErrorKind::invalid_input, "dimension must be positive");
  const std::size_t stride = stride_for(kind, dim);
  if (values.size() % stride != 0) fail(ErrorKind::invalid_input, "sample array size mismatch");
  const int nodes = static_cast<int>(values.size() / stride);
  check_grid(nodes - 1);
  require_finite(values, "grid samples");
  if (deriv) {
    if (deriv->size() != values.size()) fail(ErrorKind::invalid_input, "derivative sample size mismatch");
    require_finite(*deriv, "grid derivative samples");
  }
  GridFn f;
  f.kind_ = kind;
  f.n_ = nodes - 1;
  f.dim_ = kind == Kind::scalar ? 1 : dim;
  f.stride_ = stride;
  f.values_ = std::move(values);
  f.deriv_ = std::move(deriv);
  f.deriv_analytic_ = f.deriv_.has_value() && deriv_analytic;
  return f;
}

GridFn GridFn::sample_scalar(int grid_n, const std::function<cd(double)>& f,
                             const std::function<cd(double)>* df) {
  check_grid(grid_n);
  std::vector<cd> v(static_cast<std::size_t>(grid_n + 1));
  for (int j = 0; j <= grid_n; ++j) v[static_cast<std::size_t>(j)] = f(static_cast<double>(j) / grid_n);
  std::optional<std::vector<cd>> d;
  if (df) {
    d.emplace(static_cast<std::size_t>(grid_n + 1));
    for (int j = 0; j <= grid_n; ++j) (*d)[static_cast<std::size_t>(j)] = (*df)(static_cast<double>(j) / grid_n);
  }
  return from_samples(Kind::scalar, 1, std::move(v), std::move(d), df != nullptr);
}

GridFn GridFn::sample_vector(int grid_n, int dim, const std::function<CVector(double)>& f) {
  check_grid(grid_n);
  std::vector<cd> v(static_cast<std::size_t>(dim) * static_cast<std::size_t>(grid_n + 1));
  for (int j = 0; j <= grid_n; ++j) {
    const CVector x = f(static_cast<double>(j) / grid_n);
    if (x.dim() != dim) fail(ErrorKind::invalid_input, "sampled vector dimension mismatch");
    std::copy(x.data().begin(), x.data().end(), v.begin() + static_cast<std::ptrdiff_t>(dim) * j);
  }
  return from_samples(Kind::vector, dim, std::move(v));
}

GridFn GridFn::sample_matrix(int grid_n, int dim, const std::function<CMatrix(double)>& f,
                             const std::function<CMatrix(double)>* df) {
  check_grid(grid_n);
  const std::size_t stride = static_cast<std::size_t>(dim) * dim;
  std::vector<cd> v(stride * static_cast<std::size_t>(grid_n + 1));
  for (int j = 0; j <= grid_n; ++j) {
    const CMatrix m = f(static_cast<double>(j) / grid_n);
    if (m.dim() != dim) fail(ErrorKind::invalid_input, "sampled matrix dimension mismatch");
    std::copy(m.data().begin(), m.data().end(), v.begin() + static_cast<std::ptrdiff_t>(stride) * j);
  }
  std::optional<std::vector<cd>> d;
  if (df) {
    d.emplace(stride * static_cast<std::size_t>(grid_n + 1));
    for (int j = 0; j <= grid_n; ++j) {
      const CMatrix m = (*df)(static_cast<double>(j) / grid_n);
      std::copy(m.data().begin(), m.data().end(), d->begin() + static_cast<std::ptrdiff_t>(stride) * j);
    }
  }
  return from_samples(Kind::matrix, dim, std::move(v), std::move(d), df != nullptr);
}

GridFn GridFn::constant_matrix(int grid_n, const CMatrix& m) {
  return sample_matrix(grid_n, m.dim(), [&](double) { return m; });
}

std::span<const cd> GridFn::deriv_at(int j) const {
  if (!deriv_) fail(ErrorKind::invalid_input, "derivative samples not present");
  return {deriv_->data() + stride_ * j, stride_};
}

void GridFn::set_deriv(std::vector<cd> deriv, bool analytic) {
  if (deriv.size() != values_.size()) fail(ErrorKind::invalid_input, "derivative sample size mismatch");
  require_finite(deriv, "grid derivative samples");
  deriv_ = std::move(deriv);
  deriv_analytic_ = analytic;
}

cd GridFn::scalar_at(int j) const {
  if (kind_ != Kind::scalar) fail(ErrorKind::invalid_input, "not a scalar grid function");
  return values_[static_cast<std::size_t>(j)];
}

CVector GridFn::vector_at(int j) const {
  if (kind_ != Kind::vector) fail(ErrorKind::invalid_input, "not a vector grid function");
  CVector v(dim_);
  const auto s = at(j);
  std::copy(s.begin(), s.end(), v.data().begin());
  return v;
}

CMatrix GridFn::matrix_at(int j) const {
  if (kind_ != Kind::matrix) fail(ErrorKind::invalid_input, "not a matrix grid function");
  CMatrix m(dim_);
  const auto s = at(j);
  std::copy(s.begin(), s.end(), m.data().begin());
  return m;
}

void GridFn::set_node(int j, const CMatrix& m) {
  if (kind_ != Kind::matrix || m.dim() != dim_) fail(ErrorKind::invalid_input, "node assignment shape mismatch");
  std::copy(m.data().begin(), m.data().end(), at(j).begin());
}

void GridFn::set_node(int j, const CVector& v) {
  if (kind_ != Kind::vector || v.dim() != dim_) fail(ErrorKind::invalid_input, "node assignment shape mismatch");
  std::copy(v.data().begin(), v.data().end(), at(j).begin());
}

double GridFn::point_norm(int j) const {
  const auto s = at(j);
  switch (kind_) {
    case Kind::scalar:
      return std::abs(s[0]);
    case Kind::vector:
      return std::sqrt(kernels::active().sum_sq(s.data(), s.size()));
    case Kind::matrix:
      return op_norm(matrix_at(j));
  }
  return 0.0;
}

double GridFn::point_deriv_norm(int j) const {
  const auto s = deriv_at(j);
  switch (kind_) {
    case Kind::scalar:
      return std::abs(s[0]);
    case Kind::vector:
      return std::sqrt(kernels::active().sum_sq(s.data(), s.size()));
    case Kind::matrix: {
      CMatrix m(dim_);
      std::copy(s.begin(), s.end(), m.data().begin());
      return op_norm(m);
    }
  }
  return 0.0;
}

GridFn& GridFn::operator+=(const GridFn& o) {
  if (!same_shape(o)) fail(ErrorKind::invalid_input, "grid function shape mismatch");
  kernels::active().add(values_.data(), o.values_.data(), values_.data(), values_.size());
  deriv_.reset();
  deriv_analytic_ = false;
  return *this;
}

GridFn& GridFn::operator-=(const GridFn& o) {
  if (!same_shape(o)) fail(ErrorKind::invalid_input, "grid function shape mismatch");
  kernels::active().sub(values_.data(), o.values_.data(), values_.data(), values_.size());
  deriv_.reset();
  deriv_analytic_ = false;
  return *this;
}

GridFn& GridFn::operator*=(cd a) {
  kernels::active().scale(a, values_.data(), values_.data(), values_.size());
  if (deriv_) kernels::active().scale(a, deriv_->data(), deriv_->data(), deriv_->size());
  return *this;
}

double norm_c(const GridFn& f) {
  if (f.kind() == GridFn::Kind::scalar)
    return kernels::active().max_abs(f.values().data(), f.values().size());
  double m = 0.0;
  for (int j = 0; j <= f.grid_n(); ++j) m = std::max(m, f.point_norm(j));
  return m;
}

namespace {

double trapezoid_of_point_norms(const GridFn& f, bool deriv) {
  const int n = f.grid_n();
  double acc = 0.0;
  for (int j = 0; j <= n; ++j) {
    const double w = (j == 0 || j == n) ? 0.5 : 1.0;
    acc += w * (deriv ? f.point_deriv_norm(j) : f.point_norm(j));
  }
  return acc / n;
}

}  // namespace

double norm_l1(const GridFn& f) { return trapezoid_of_point_norms(f, false); }

double norm_w11(const GridFn& f) {
  if (f.has_deriv()) return norm_l1(f) + trapezoid_of_point_norms(f, true);
  return norm_l1(f) + norm_l1(derivative(f));
}

NormReport norm_report(const GridFn& f) {
  NormReport r;
  r.c_norm = norm_c(f);
  r.l1_norm = norm_l1(f);
  r.w11_norm = norm_w11(f);
  r.deriv_from_finite_differences = !f.has_deriv();
  return r;
}

std::vector<cd> integrate(const GridFn& f) {
  const int n = f.grid_n();
  const std::size_t stride = f.stride();
  std::vector<cd> acc(stride, cd(0.0, 0.0));
  for (int j = 0; j <= n; ++j) {
    const cd w = (j == 0 || j == n) ? 0.5 : 1.0;
    kernels::active().axpy(w, f.at(j).data(), acc.data(), stride);
  }
  kernels::active().scale(cd(1.0 / n, 0.0), acc.data(), acc.data(), stride);
  return acc;
}

cd integrate_scalar(const GridFn& f) {
  if (f.kind() != GridFn::Kind::scalar) fail(ErrorKind::invalid_input, "integrate_scalar needs a scalar grid function");
  return integrate(f)[0];
}

GridFn derivative(const GridFn& f) {
  const int n = f.grid_n();
  const std::size_t stride = f.stride();
  const double h = f.h();
  std::vector<cd> d(f.values().size());
  const auto v = f.values();
  for (std::size_t c = 0; c < stride; ++c) {
    auto val = [&](int j) { return v[stride * static_cast<std::size_t>(j) + c]; };
    d[c] = (-3.0 * val(0) + 4.0 * val(1) - val(2)) / (2.0 * h);
    for (int j = 1; j < n; ++j)
      d[stride * static_cast<std::size_t>(j) + c] = (val(j + 1) - val(j - 1)) / (2.0 * h);
    d[stride * static_cast<std::size_t>(n) + c] = (3.0 * val(n) - 4.0 * val(n - 1) + val(n - 2)) / (2.0 * h);
  }
  return GridFn::from_samples(f.kind(), f.dim(), std::move(d));
}

namespace {

int reflect_index(int j, int n) {
  while (j < 0 || j > n) {
    if (j < 0) j = -j;
    if (j > n) j = 2 * n - j;
  }
  return j;
}

// C^1 ramp: 0 at 0, 1 at 1.
double smoothstep(double u) { return u * u * (3.0 - 2.0 * u); }
double smoothstep_d(double u) { return 6.0 * u * (1.0 - u); }

}  // namespace

GridFn mollify(const GridFn& f, double width, bool vanish_at_ends) {
  if (!(width > 0.0 && width < 0.25)) fail(ErrorKind::invalid_input, "mollify width must lie in (0, 1/4)");
  const int n = f.grid_n();
  const std::size_t stride = f.stride();
  const double h = f.h();

  const int m = std::max(1, static_cast<int>(std::ceil(width * n)));
  // hat kernel taps, normalized to unit discrete mass so constants are fixed
  std::vector<double> taps(static_cast<std::size_t>(2 * m + 1));
  double mass = 0.0;
  for (int i = -m; i <= m; ++i) {
    const double u = i * h;
    const double k = std::max(0.0, (width - std::abs(u)) / (width * width));
    taps[static_cast<std::size_t>(i + m)] = k;
    mass += k;
  }
  if (mass <= 0.0) fail(ErrorKind::invalid_input, "mollify width too small for this grid");
  for (double& k : taps) k /= mass;
  // derivative taps: odd-symmetric, zero total mass
  std::vector<double> dtaps(static_cast<std::size_t>(2 * m + 1), 0.0);
  const double dscale = 1.0 / (mass * h);  // same normalization as the value taps
  for (int i = -m; i <= m; ++i) {
    const double u = i * h;
    double kd = 0.0;
    if (u > 0.0 && u < width)
      kd = -1.0 / (width * width);
    else if (u < 0.0 && u > -width)
      kd = 1.0 / (width * width);
    dtaps[static_cast<std::size_t>(i + m)] = kd * dscale * h;
  }

  std::vector<cd> out(f.values().size());
  std::vector<cd> dout(f.values().size());
  const auto v = f.values();
  for (int j = 0; j <= n; ++j) {
    for (std::size_t c = 0; c < stride; ++c) {
      cd acc = 0.0, dacc = 0.0;
      for (int i = -m; i <= m; ++i) {
        const cd s = v[stride * static_cast<std::size_t>(reflect_index(j - i, n)) + c];
        acc += taps[static_cast<std::size_t>(i + m)] * s;
        dacc += dtaps[static_cast<std::size_t>(i + m)] * s;
      }
      out[stride * static_cast<std::size_t>(j) + c] = acc;
      dout[stride * static_cast<std::size_t>(j) + c] = dacc;
    }
  }

  if (vanish_at_ends) {
    for (int j = 0; j <= n; ++j) {
      const double t = f.t(j);
      double chi = 1.0, dchi = 0.0;
      if (t <= 0.0 || t >= 1.0) {
        chi = 0.0;
      } else if (t < width) {
        chi = smoothstep(t / width);
        dchi = smoothstep_d(t / width) / width;
      } else if (t > 1.0 - width) {
        chi = smoothstep((1.0 - t) / width);
        dchi = -smoothstep_d((1.0 - t) / width) / width;
      }
      for (std::size_t c = 0; c < stride; ++c) {
        const std::size_t idx = stride * static_cast<std::size_t>(j) + c;
        dout[idx] = chi * dout[idx] + dchi * out[idx];
        out[idx] = chi * out[idx];
      }
    }
  }

  return GridFn::from_samples(f.kind(), f.dim(), std::move(out), std::move(dout), true);
}

GridFn matmul_nodes(const GridFn& a, const GridFn& b) {
  if (a.kind() != GridFn::Kind::matrix || b.kind() != GridFn::Kind::matrix || !a.same_shape(b))
    fail(ErrorKind::invalid_input, "nodewise product needs matching matrix grid functions");
  GridFn c = GridFn::zeros(GridFn::Kind::matrix, a.grid_n(), a.dim());
  const std::size_t n = static_cast<std::size_t>(a.dim());
  for (int j = 0; j <= a.grid_n(); ++j)
    kernels::active().matmul(a.at(j).data(), b.at(j).data(), c.at(j).data(), n);
  return c;
}

GridFn apply_nodes(const GridFn& a, const GridFn& x) {
  if (a.kind() != GridFn::Kind::matrix || x.kind() != GridFn::Kind::vector || a.dim() != x.dim() ||
      a.grid_n() != x.grid_n())
    fail(ErrorKind::invalid_input, "nodewise apply needs a matrix and a vector grid function");
  GridFn y = GridFn::zeros(GridFn::Kind::vector, x.grid_n(), x.dim());
  const int d = a.dim();
  for (int j = 0; j <= a.grid_n(); ++j) {
    const auto am = a.at(j);
    const auto xv = x.at(j);
    const auto yv = y.at(j);
    for (int i = 0; i < d; ++i) {
      cd acc = 0.0;
      for (int k = 0; k < d; ++k) acc += am[static_cast<std::size_t>(i) * d + k] * xv[static_cast<std::size_t>(k)];
      yv[static_cast<std::size_t>(i)] = acc;
    }
  }
  return y;
}

GridFn scaled(const GridFn& f, cd a) {
  GridFn g = f;
  g *= a;
  return g;
}

}  // namespace diagode
