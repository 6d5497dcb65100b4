#include "diagode/instance_gen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace diagode {

namespace {
constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
}

GridFn random_profile(Rng& rng, int grid_n, cd base, double amp) {
  const int freq = rng.integer(1, 2);
  const double phase = rng.uniform(0.0, kTwoPi);
  const double a = rng.uniform(0.2, 1.0) * amp;
  std::vector<cd> v(static_cast<std::size_t>(grid_n + 1)), d(static_cast<std::size_t>(grid_n + 1));
  for (int j = 0; j <= grid_n; ++j) {
    const double t = static_cast<double>(j) / grid_n;
    v[static_cast<std::size_t>(j)] = base + a * std::sin(kTwoPi * freq * t + phase);
    d[static_cast<std::size_t>(j)] = a * kTwoPi * freq * std::cos(kTwoPi * freq * t + phase);
  }
  return GridFn::from_samples(GridFn::Kind::scalar, 1, std::move(v), std::move(d), true);
}

namespace {

struct TrigEntry {
  cd a1, b1, a2, b2;
};

GridFn trig_matrix(int grid_n, int dim, const std::vector<TrigEntry>& coefs, bool vanish) {
  const std::size_t stride = static_cast<std::size_t>(dim) * dim;
  std::vector<cd> v(stride * static_cast<std::size_t>(grid_n + 1));
  std::vector<cd> d(stride * static_cast<std::size_t>(grid_n + 1));
  for (int j = 0; j <= grid_n; ++j) {
    const double t = static_cast<double>(j) / grid_n;
    for (std::size_t e = 0; e < stride; ++e) {
      const TrigEntry& c = coefs[e];
      cd val = c.a1 * std::sin(kTwoPi * t) + c.a2 * std::sin(2.0 * kTwoPi * t);
      cd der = c.a1 * kTwoPi * std::cos(kTwoPi * t) + c.a2 * 2.0 * kTwoPi * std::cos(2.0 * kTwoPi * t);
      if (vanish) {
        val += c.b1 * (1.0 - std::cos(kTwoPi * t)) + c.b2 * (1.0 - std::cos(2.0 * kTwoPi * t));
        der += c.b1 * kTwoPi * std::sin(kTwoPi * t) + c.b2 * 2.0 * kTwoPi * std::sin(2.0 * kTwoPi * t);
      } else {
        val += c.b1 * std::cos(kTwoPi * t) + c.b2 * std::cos(2.0 * kTwoPi * t);
        der += -c.b1 * kTwoPi * std::sin(kTwoPi * t) - c.b2 * 2.0 * kTwoPi * std::sin(2.0 * kTwoPi * t);
      }
      v[stride * static_cast<std::size_t>(j) + e] = val;
      d[stride * static_cast<std::size_t>(j) + e] = der;
    }
  }
  return GridFn::from_samples(GridFn::Kind::matrix, dim, std::move(v), std::move(d), true);
}

}  // namespace

GridFn random_smooth_matrix(Rng& rng, int grid_n, int dim, double target_c_norm, bool vanish_at_ends) {
  std::vector<TrigEntry> coefs(static_cast<std::size_t>(dim) * dim);
  for (TrigEntry& c : coefs) {
    c.a1 = rng.uniform(-1.0, 1.0) * rng.unit_complex();
    c.b1 = rng.uniform(-1.0, 1.0) * rng.unit_complex();
    c.a2 = rng.uniform(-0.5, 0.5) * rng.unit_complex();
    c.b2 = rng.uniform(-0.5, 0.5) * rng.unit_complex();
  }
  GridFn m = trig_matrix(grid_n, dim, coefs, vanish_at_ends);
  const double cn = norm_c(m);
  if (cn > 0.0 && target_c_norm > 0.0) m *= cd(target_c_norm / cn, 0.0);
  if (target_c_norm == 0.0) m *= cd(0.0, 0.0);
  return m;
}

GridFn random_smooth_vector(Rng& rng, int grid_n, int dim, double scale) {
  std::vector<cd> amp(static_cast<std::size_t>(dim));
  std::vector<double> phase(static_cast<std::size_t>(dim));
  std::vector<int> freq(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) {
    amp[static_cast<std::size_t>(i)] = scale * rng.uniform(0.2, 1.0) * rng.unit_complex();
    phase[static_cast<std::size_t>(i)] = rng.uniform(0.0, kTwoPi);
    freq[static_cast<std::size_t>(i)] = rng.integer(1, 3);
  }
  return GridFn::sample_vector(grid_n, dim, [&](double t) {
    CVector v(dim);
    for (int i = 0; i < dim; ++i)
      v[i] = amp[static_cast<std::size_t>(i)] *
             std::sin(kTwoPi * freq[static_cast<std::size_t>(i)] * t + phase[static_cast<std::size_t>(i)]);
    return v;
  });
}

PiFrame random_frame(Rng& rng, int grid_n, int max_dim, double c_scale) {
  const int dim = rng.integer(2, std::max(2, max_dim));
  const int atom_count = rng.integer(2, dim);

  // contiguous index groups over a random permutation
  std::vector<int> perm(static_cast<std::size_t>(dim));
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = dim - 1; i > 0; --i) std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(rng.integer(0, i))]);
  std::vector<std::vector<int>> groups(static_cast<std::size_t>(atom_count));
  for (int i = 0; i < dim; ++i) groups[static_cast<std::size_t>(i % atom_count)].push_back(perm[static_cast<std::size_t>(i)]);

  std::vector<int> atom_block(static_cast<std::size_t>(atom_count));
  for (int a = 0; a < atom_count; ++a) atom_block[static_cast<std::size_t>(a)] = rng.integer(0, 2);
  atom_block[0] = 0;  // keep the zero block occupied

  std::vector<int> zero, minus, plus;
  for (int a = 0; a < atom_count; ++a) {
    auto& dst = atom_block[static_cast<std::size_t>(a)] == 0 ? zero
               : atom_block[static_cast<std::size_t>(a)] == 1 ? minus
                                                              : plus;
    dst.insert(dst.end(), groups[static_cast<std::size_t>(a)].begin(), groups[static_cast<std::size_t>(a)].end());
  }
  Partition part(dim, zero, minus, plus);

  // spectral line: spaced base points with mild oscillation, randomly rotated
  const cd rot = rng.unit_complex();
  double pos = rng.uniform(-1.0, 1.0);
  std::vector<SpectralAtom> atoms;
  for (int a = 0; a < atom_count; ++a) {
    const double amp = rng.uniform(0.02, 0.15);
    GridFn beta = random_profile(rng, grid_n, pos, amp);
    beta *= rot;
    atoms.push_back(SpectralAtom{std::move(beta), groups[static_cast<std::size_t>(a)],
                                 atom_block[static_cast<std::size_t>(a)]});
    pos += rng.uniform(1.45, 2.5);
  }
  SpectralAtoms b(dim, std::move(atoms), part);
  const GapResult g = gap(b, part);

  GridFn c = random_smooth_matrix(rng, grid_n, dim, c_scale * g.d_atom / (8.0 * dim), true);
  return PiFrame::make(part, std::move(b), std::move(c), true);
}

AdmissibleBvp random_admissible_bvp(Rng& rng, int grid_n, int max_dim) {
  AdmissibleBvp inst;
  const int dim = rng.integer(2, std::max(2, max_dim));
  CMatrix p(dim);
  int ones = 0;
  for (int i = 0; i < dim; ++i) {
    if (rng.integer(0, 1) == 1) {
      p(i, i) = 1.0;
      ++ones;
    }
  }
  if (ones == 0) {
    const int i = rng.integer(0, dim - 1);
    p(i, i) = 1.0;  // keep P nonzero
  }
  inst.p = p;

  const double mu = rng.uniform(1.0, 3.0);
  GridFn b = random_smooth_matrix(rng, grid_n, dim, 0.3 * mu, false);
  // zero the parts coupling ranges of P and 1-P so A commutes with P
  for (int j = 0; j <= grid_n; ++j) {
    auto v = b.at(j);
    for (int r = 0; r < dim; ++r)
      for (int col = 0; col < dim; ++col)
        if (p(r, r) != p(col, col)) v[static_cast<std::size_t>(r) * dim + col] = 0.0;
  }
  GridFn a = b;
  CMatrix refl = p;
  refl *= 2.0;
  refl -= CMatrix::identity(dim);
  for (int j = 0; j <= grid_n; ++j) {
    auto v = a.at(j);
    for (int i = 0; i < dim; ++i) v[static_cast<std::size_t>(i) * dim + i] -= mu * refl(i, i);
  }
  inst.a = std::move(a);

  inst.gamma = rng.uniform(0.5, 0.9);
  inst.theta = rng.uniform(0.25, 0.6);
  inst.v = random_smooth_matrix(rng, grid_n, dim, 1.0, false);
  const double vl1 = norm_l1(inst.v);
  inst.v *= cd(0.9 * inst.theta * inst.gamma / vl1, 0.0);

  inst.f = random_smooth_vector(rng, grid_n, dim, 1.0);
  inst.xi = CVector(dim);
  for (int i = 0; i < dim; ++i) inst.xi[i] = rng.uniform(-1.0, 1.0) * rng.unit_complex();
  return inst;
}

ParamFamily demo_family(int grid_n, std::vector<double> magnitudes) {
  ParamFamily fam;
  fam.dim = 3;
  fam.blocks = {{0, 1}, {2}};
  fam.direction = cd(1.0, 0.0);
  fam.magnitudes = std::move(magnitudes);
  fam.h.push_back(GridFn::sample_scalar(
      grid_n, [](double t) { return cd(-0.6 - 0.2 * t, 0.0); },
      nullptr));
  fam.h.back().set_deriv(std::vector<cd>(static_cast<std::size_t>(grid_n + 1), cd(-0.2, 0.0)), true);
  const std::function<cd(double)> h2 = [](double t) {
    return cd(0.6 + 0.1 * std::sin(kTwoPi * t), 0.05 * std::cos(kTwoPi * t));
  };
  const std::function<cd(double)> dh2 = [](double t) {
    return cd(0.1 * kTwoPi * std::cos(kTwoPi * t), -0.05 * kTwoPi * std::sin(kTwoPi * t));
  };
  fam.h.push_back(GridFn::sample_scalar(grid_n, h2, &dh2));

  Rng rng(445566);
  fam.v = random_smooth_matrix(rng, grid_n, 3, 0.4, false);
  return fam;
}

}  // namespace diagode
