#include "diagode/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "diagode/companion.hpp"
#include "diagode/csvout.hpp"
#include "diagode/instance_gen.hpp"
#include "diagode/kernels.hpp"

namespace diagode {

namespace {

using clock_type = std::chrono::steady_clock;

double ratio(double value, double limit) { return value / limit; }

CompanionSpec smooth_companion_n2(int grid_n) {
  CompanionSpec spec;
  spec.n = 2;
  spec.zeta = cd(0.3, 0.0);
  spec.grid_n = grid_n;
  spec.p = {Expr::parse("1+t^2/2"), Expr::parse("1")};
  spec.q[{1, 1}] = Expr::parse("cos(6.283185307179586*t)");
  return spec;
}

CompanionSpec smooth_companion_n3(int grid_n) {
  CompanionSpec spec;
  spec.n = 3;
  spec.zeta = cd(0.2, 0.1);
  spec.grid_n = grid_n;
  spec.p = {Expr::parse("1+t^2/2"), Expr::parse("1"), Expr::parse("exp(0.2*t)")};
  spec.q[{1, 1}] = Expr::parse("cos(6.283185307179586*t)");
  spec.q[{2, 1}] = Expr::parse("sin(6.283185307179586*t)");
  spec.q[{3, 3}] = Expr::parse("0.5*cos(6.283185307179586*t)");
  return spec;
}

CompanionSpec trivial_companion(int grid_n) {
  CompanionSpec spec;
  spec.n = 2;
  spec.zeta = cd(0.0, 0.0);
  spec.grid_n = grid_n;
  spec.p = {Expr::parse("1"), Expr::parse("1")};
  return spec;
}

std::string decay_csv(const std::vector<DecayRow>& rows) {
  std::string out = csv_line({"magnitude", "rel_sup_error", "residual_l1", "scaled_residual"});
  for (const DecayRow& r : rows)
    out += csv_line({csv_num(r.magnitude), csv_num(r.rel_sup_error), csv_num(r.residual_l1),
                     csv_num(r.scaled_residual)});
  return out;
}

// 1. transformer bounds over randomized frames
CriterionResult criterion_transformer_bounds(const SelftestConfig& cfg) {
  CriterionResult res{1, "transformer_bounds", false, 0.0, 1.0, 0.0};
  Rng rng(cfg.seed + 1);
  double worst = 0.0;
  for (int trial = 0; trial < cfg.frame_trials; ++trial) {
    const PiFrame frame = random_frame(rng, cfg.frame_grid, 4, 0.8);
    TransformerOptions opts;
    opts.threads = cfg.threads;
    const TransformerBundle bundle = build_transformer(frame, opts);
    const BoundReport& rep = bundle.report;
    for (const EqBound* eq : {&rep.transformer_dev, &rep.inverse_dev, &rep.sdot_l1, &rep.conjugation})
      worst = std::max(worst, eq->lhs / (1.05 * eq->rhs + 1e-15));
    worst = std::max(worst, ratio(rep.s_end_dev, 1e-9));
    worst = std::max(worst, ratio(rep.q_sum_dev, 1e-8));
  }
  res.measured = worst;
  res.pass = worst <= 1.0;
  return res;
}

// 2. conjugation estimate
CriterionResult criterion_conjugation_estimate(const SelftestConfig& cfg) {
  CriterionResult res{2, "conjugation_estimate", false, 0.0, 1.0, 0.0};
  Rng rng(cfg.seed + 2);
  double worst = 0.0;
  for (int trial = 0; trial < cfg.pair_trials; ++trial) {
    const PiFrame frame = random_frame(rng, cfg.frame_grid, 3, 0.8);
    TransformerOptions opts;
    opts.threads = cfg.threads;
    const TransformerBundle bundle = build_transformer(frame, opts);
    const GridFn a =
        random_smooth_matrix(rng, cfg.frame_grid, frame.partition.dim(), rng.uniform(0.5, 2.0), false);
    const ConjugationEstimate est = conjugation_estimate(frame, bundle, a);
    worst = std::max(worst, est.lhs / (1.05 * est.rhs + 1e-15));
  }
  res.measured = worst;
  res.pass = worst <= 1.0;
  return res;
}

// 3. contraction solve against the direct oracle
CriterionResult criterion_contraction(const SelftestConfig& cfg) {
  CriterionResult res{3, "contraction_vs_oracle", false, 0.0, 1.0, 0.0};
  Rng rng(cfg.seed + 3);
  double worst = 0.0;
  for (int trial = 0; trial < cfg.contraction_trials; ++trial) {
    const AdmissibleBvp inst = random_admissible_bvp(rng, cfg.grid_n, 4);
    ContractionParams params;
    params.gamma = inst.gamma;
    params.theta = inst.theta;
    const ContractionResult sol = solve_contraction(inst.a, inst.v, inst.f, inst.p, inst.xi, params);
    GridFn apv = inst.a;
    apv += inst.v;
    const GridFn oracle = solve_direct(BvpProblem{apv, inst.f, inst.p, inst.xi});
    GridFn diff = sol.x;
    diff -= oracle;
    const double scale = std::max(1.0, norm_c(oracle));
    worst = std::max(worst, ratio(norm_c(diff) / scale, 1e-8));
    if (sol.contraction_factor > 0.0)
      worst = std::max(worst, sol.contraction_factor / (1.05 * inst.theta));
    GridFn gap = sol.x;
    gap -= sol.x0;
    const double bound = inst.theta / (1.0 - inst.theta) * norm_c(sol.x0);
    worst = std::max(worst, norm_c(gap) / (1.05 * bound + 1e-15));
  }
  res.measured = worst;
  res.pass = worst <= 1.0;
  return res;
}

// 4. dichotomy scan vs O(N^2) brute force
CriterionResult criterion_dichotomy_scan(const SelftestConfig& cfg) {
  CriterionResult res{4, "dichotomy_scan", false, 0.0, 1.0, 0.0};
  Rng rng(cfg.seed + 4);
  const int n = 256;
  double worst = 0.0;
  for (int trial = 0; trial < cfg.dichotomy_trials; ++trial) {
    const int dim = rng.integer(2, 4);
    const GridFn a = random_smooth_matrix(rng, n, dim, rng.uniform(0.5, 4.0), false);
    CMatrix p(dim);
    for (int i = 0; i < dim; ++i)
      if (rng.integer(0, 1) == 1) p(i, i) = 1.0;
    const double scan = dichotomy_worst(a, p);
    // brute force over all subintervals from the cumulative integral
    CMatrix refl = p;
    refl *= 2.0;
    refl -= CMatrix::identity(dim);
    std::vector<double> cum(static_cast<std::size_t>(n + 1), 0.0);
    double prev = omega(refl * a.matrix_at(0));
    for (int j = 1; j <= n; ++j) {
      const double curv = omega(refl * a.matrix_at(j));
      cum[static_cast<std::size_t>(j)] = cum[static_cast<std::size_t>(j - 1)] + 0.5 / n * (prev + curv);
      prev = curv;
    }
    double brute = 0.0;
    for (int lo = 0; lo <= n; ++lo)
      for (int hi = lo; hi <= n; ++hi)
        brute = std::max(brute, cum[static_cast<std::size_t>(hi)] - cum[static_cast<std::size_t>(lo)]);
    worst = std::max(worst, ratio(std::abs(scan - brute), 1e-12));
  }
  res.measured = worst;
  res.pass = worst <= 1.0;
  return res;
}

// 5. Liouville determinant identity
CriterionResult criterion_liouville(const SelftestConfig& cfg) {
  CriterionResult res{5, "liouville_identity", false, 0.0, 1.0, 0.0};
  Rng rng(cfg.seed + 5);
  double worst = 0.0;
  for (int trial = 0; trial < cfg.liouville_trials; ++trial) {
    const int dim = rng.integer(2, 4);
    const GridFn a = random_smooth_matrix(rng, cfg.grid_n, dim, rng.uniform(5.0, 20.0), false);
    const GridFn m = fundamental_matrix(a);
    std::vector<cd> tr(static_cast<std::size_t>(cfg.grid_n + 1));
    for (int j = 0; j <= cfg.grid_n; ++j) {
      cd acc = 0.0;
      for (int i = 0; i < dim; ++i) acc += a.at(j)[static_cast<std::size_t>(i) * dim + i];
      tr[static_cast<std::size_t>(j)] = acc;
    }
    cd integral = 0.0;
    for (int j = 1; j <= cfg.grid_n; ++j)
      integral += 0.5 / cfg.grid_n * (tr[static_cast<std::size_t>(j - 1)] + tr[static_cast<std::size_t>(j)]);
    const cd expected = std::exp(integral);
    const cd got = det(m.matrix_at(cfg.grid_n));
    worst = std::max(worst, ratio(std::abs(got - expected) / std::abs(expected), 1e-7));
  }
  res.measured = worst;
  res.pass = worst <= 1.0;
  return res;
}

std::string fmt_coef(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CompanionSpec random_companion(Rng& rng, int n, int grid_n) {
  CompanionSpec spec;
  spec.n = n;
  spec.grid_n = grid_n;
  spec.zeta = cd(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
  for (int k = 0; k < n; ++k) {
    const double base = rng.uniform(0.8, 1.6);
    const double amp = rng.uniform(0.05, 0.3);
    const double freq = 6.283185307179586 * rng.integer(1, 2);
    spec.p.push_back(Expr::parse(fmt_coef(base) + "+" + fmt_coef(amp) + "*sin(" + fmt_coef(freq) +
                                 "*t+" + fmt_coef(rng.uniform(0.0, 6.0)) + ")"));
  }
  for (int k = 1; k <= n; ++k)
    for (int l = 1; l <= k; ++l)
      if (rng.integer(0, 1) == 1)
        spec.q[{k, l}] = Expr::parse(fmt_coef(rng.uniform(-1.0, 1.0)) + "*cos(6.283185307179586*t)");
  return spec;
}

// 6. exact Vandermonde conjugation
CriterionResult criterion_exact_conjugation(const SelftestConfig& cfg) {
  CriterionResult res{6, "exact_conjugation", false, 0.0, 1.0, 0.0};
  Rng rng(cfg.seed + 6);
  double worst = 0.0;
  const auto& ker = kernels::active();
  for (int n = 2; n <= 4; ++n) {
    const SampledCompanion sc = sample_companion(random_companion(rng, n, 256));
    for (int trial = 0; trial < 5; ++trial) {
      const cd lambda = std::polar(rng.uniform(5.0, 80.0), rng.uniform(0.05, 6.2));
      const auto [s, s_inv] = build_S_lambda(sc, lambda);
      const GridFn d0 = build_D0(sc, lambda);
      const GridFn al = build_A_lambda(sc, lambda);
      const std::size_t nd = static_cast<std::size_t>(n);
      std::vector<cd> tmp(nd * nd), tmp2(nd * nd);
      for (int j = 0; j <= sc.grid_n; ++j) {
        ker.matmul(d0.at(j).data(), s.at(j).data(), tmp.data(), nd);
        ker.matmul(s_inv.at(j).data(), tmp.data(), tmp2.data(), nd);
        CMatrix diff(n);
        std::copy(tmp2.begin(), tmp2.end(), diff.data().begin());
        diff -= al.matrix_at(j);
        worst = std::max(worst, ratio(op_norm(diff) / op_norm(d0.matrix_at(j)), 1e-10));
      }
    }
  }
  res.measured = worst;
  res.pass = worst <= 1.0;
  return res;
}

// 7. closed-form diagonal correction vs numerical S^{-1} S'
CriterionResult criterion_diag_correction(const SelftestConfig& cfg) {
  CriterionResult res{7, "diag_correction", false, 0.0, 1.0, 0.0};
  double worst = 0.0;
  for (int variant = 0; variant < 2; ++variant) {
    const SampledCompanion sc = sample_companion(
        variant == 0 ? smooth_companion_n2(cfg.grid_n) : smooth_companion_n3(cfg.grid_n));
    const GridFn closed = diag_correction(sc);
    const cd lambdas[2] = {cd(3.0, 2.0), cd(-1.5, 4.0)};
    std::vector<std::vector<cd>> numeric(2);
    for (int i = 0; i < 2; ++i) {
      const auto [s, s_inv] = build_S_lambda(sc, lambdas[i]);
      const GridFn ss = matmul_nodes(s_inv, derivative(s));
      numeric[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(sc.grid_n + 1) *
                                                  static_cast<std::size_t>(sc.n));
      for (int j = 0; j <= sc.grid_n; ++j)
        for (int k = 0; k < sc.n; ++k)
          numeric[static_cast<std::size_t>(i)][static_cast<std::size_t>(j) * sc.n + k] =
              ss.at(j)[static_cast<std::size_t>(k) * sc.n + k];
    }
    for (int j = 0; j <= sc.grid_n; ++j) {
      for (int k = 0; k < sc.n; ++k) {
        const cd num = numeric[0][static_cast<std::size_t>(j) * sc.n + k];
        const cd num2 = numeric[1][static_cast<std::size_t>(j) * sc.n + k];
        worst = std::max(worst, ratio(std::abs(num - closed.scalar_at(j)), 1e-6));
        worst = std::max(worst, ratio(std::abs(num - num2), 1e-8));
      }
    }
  }
  res.measured = worst;
  res.pass = worst <= 1.0;
  return res;
}

// 8. O(1/|lambda|) residual band
CriterionResult criterion_residual_band(const SelftestConfig& cfg) {
  CriterionResult res{8, "residual_decay_band", false, 0.0, 1.0, 0.0};
  const std::vector<double> mags = {10, 20, 40, 80, 160};
  double worst = 0.0;
  for (int variant = 0; variant < 2; ++variant) {
    const SampledCompanion sc = sample_companion(
        variant == 0 ? smooth_companion_n2(cfg.grid_n) : smooth_companion_n3(cfg.grid_n));
    const SectorContext sec = sector_permutation(sc.n, 1);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double mag : mags) {
      const cd lambda = std::polar(mag, sec.midpoint_arg);
      const double prod = mag * residual_check(sc, lambda);
      lo = std::min(lo, prod);
      hi = std::max(hi, prod);
    }
    worst = std::max(worst, hi / (3.0 * lo));
  }
  res.measured = worst;
  res.pass = worst <= 1.0;
  return res;
}

double max_successive_ratio(const std::vector<double>& values) {
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < values.size(); ++i)
    worst = std::max(worst, values[i + 1] / values[i]);
  return worst;
}

// 9. asymptotic decay, both boundary variants, two indices
CriterionResult criterion_decay(const SelftestConfig& cfg) {
  CriterionResult res{9, "asymptotic_decay", false, 0.0, 1.0, 0.0};
  double worst = 0.0;
  const std::vector<double> mags = {10, 20, 40, 80};
  const ParamFamily fam = demo_family(cfg.grid_n, mags);
  SolveOptions opts;
  opts.threads = 1;
  for (int k = 0; k < 2; ++k) {
    for (Side side : {Side::left, Side::right}) {
      const CVector xi = CVector::unit(3, fam.blocks[static_cast<std::size_t>(k)].front());
      std::vector<double> errs;
      for (std::size_t nu = 0; nu < mags.size(); ++nu)
        errs.push_back(asymptotic_compare(fam, static_cast<int>(nu), k, xi, side, opts).rel_sup_error);
      worst = std::max(worst, max_successive_ratio(errs) / 0.7);
    }
  }
  const SampledCompanion sc = sample_companion(smooth_companion_n2(cfg.grid_n));
  const SectorContext sec = sector_permutation(sc.n, 1);
  for (int k = 1; k <= 2; ++k) {
    for (Side side : {Side::left, Side::right}) {
      const std::vector<DecayRow> rows = verify_asymptotics(sc, sec, mags, k, side, opts);
      std::vector<double> errs;
      for (const DecayRow& r : rows) errs.push_back(r.rel_sup_error);
      worst = std::max(worst, max_successive_ratio(errs) / 0.7);
    }
  }
  res.measured = worst;
  res.pass = worst <= 1.0;
  return res;
}

// 10. refinement bound dominates the measured gap at the two largest magnitudes
CriterionResult criterion_refinement(const SelftestConfig& cfg) {
  CriterionResult res{10, "refinement_bound", false, 0.0, 1.0, 0.0};
  const std::vector<double> mags = {10, 20, 40, 80};
  const ParamFamily fam = demo_family(cfg.grid_n, mags);
  double worst = 0.0;
  for (int k = 0; k < 2; ++k) {
    const CVector xi = CVector::unit(3, fam.blocks[static_cast<std::size_t>(k)].front());
    for (int nu : {2, 3}) {
      const RefineResult r = refine(fam, nu, k, xi);
      worst = std::max(worst, r.actual_gap / r.refined_bound);
    }
  }
  res.measured = worst;
  res.pass = worst <= 1.0;
  return res;
}

// 11. exactly solvable case
CriterionResult criterion_exact_case(const SelftestConfig& cfg) {
  CriterionResult res{11, "exactly_solvable_case", false, 0.0, 1.0, 0.0};
  const SampledCompanion sc = sample_companion(trivial_companion(cfg.grid_n));
  const SectorContext sec = sector_permutation(2, 1);
  const cd lambda = std::polar(50.0, sec.midpoint_arg);
  double worst = 0.0;

  // Birkhoff solutions against e^{+-lambda t} xi
  for (int k = 1; k <= 2; ++k) {
    const BirkhoffSolution birk = birkhoff_solution(sc, lambda, k, sec);
    const cd mode = k == 1 ? cd(-1.0, 0.0) : cd(1.0, 0.0);
    for (int j = 0; j <= sc.grid_n; ++j) {
      const cd want = std::exp(lambda * mode * (static_cast<double>(j) / sc.grid_n));
      const cd got = birk.y.at(j)[static_cast<std::size_t>(k - 1)];
      worst = std::max(worst, ratio(std::abs(got - want) / std::abs(want), 1e-10));
    }
  }

  // pipeline against the direct solve of the transformed (diagonal) system
  for (int k = 1; k <= 2; ++k) {
    SolveOptions opts;
    const std::vector<DecayRow> rows = verify_asymptotics(sc, sec, {50.0}, k, Side::left, opts);
    worst = std::max(worst, ratio(rows[0].rel_sup_error, 1e-6));

    StructuredProblem prob = companion_structured_problem(sc, lambda, sec, k, Side::left);
    const StructuredResult sol = solve_structured(prob, opts);
    const GridFn x_pipeline = sol.full.materialize();

    GridFn coeff = transformed_coefficient(sc, lambda);
    CMatrix p(2);
    for (int pos = 0; pos <= prob.k; ++pos) {
      const int idx = prob.blocks[static_cast<std::size_t>(pos)].front();
      p(idx, idx) = 1.0;
    }
    const GridFn zero_f = GridFn::zeros(GridFn::Kind::vector, sc.grid_n, 2);
    const GridFn direct = solve_direct(BvpProblem{coeff, zero_f, p, prob.xi});
    double sup = 0.0, scale = 0.0;
    for (int j = 0; j <= sc.grid_n; ++j) {
      double num = 0.0;
      for (int c = 0; c < 2; ++c)
        num += std::norm(x_pipeline.at(j)[static_cast<std::size_t>(c)] -
                         direct.at(j)[static_cast<std::size_t>(c)]);
      sup = std::max(sup, std::sqrt(num) / std::max(1e-280, direct.point_norm(j)));
      scale = std::max(scale, direct.point_norm(j));
    }
    worst = std::max(worst, ratio(sup, 1e-6));
  }
  res.measured = worst;
  res.pass = worst <= 1.0;
  return res;
}

// 12. determinism: repeated runs give byte-identical tables
CriterionResult criterion_determinism(const SelftestConfig& cfg) {
  CriterionResult res{12, "determinism", false, 0.0, 1.0, 0.0};
  auto make = [&]() {
    const SampledCompanion sc = sample_companion(trivial_companion(std::min(cfg.grid_n, 512)));
    const SectorContext sec = sector_permutation(2, 1);
    SolveOptions opts;
    opts.threads = cfg.threads;
    return decay_csv(verify_asymptotics(sc, sec, {10.0, 20.0}, 1, Side::left, opts));
  };
  const std::string first = make();
  const std::string second = make();
  res.measured = first == second ? 0.0 : 2.0;
  res.pass = first == second;
  return res;
}

}  // namespace

std::vector<CriterionResult> run_selftest(const SelftestConfig& cfg) {
  std::vector<CriterionResult> out;
  struct Entry {
    CriterionResult (*fn)(const SelftestConfig&);
    double time_limit;  // seconds; 0 = unconstrained
  };
  const Entry entries[] = {
      {criterion_transformer_bounds, 60.0}, {criterion_conjugation_estimate, 30.0},
      {criterion_contraction, 60.0},        {criterion_dichotomy_scan, 0.0},
      {criterion_liouville, 0.0},           {criterion_exact_conjugation, 0.0},
      {criterion_diag_correction, 0.0},     {criterion_residual_band, 120.0},
      {criterion_decay, 180.0},             {criterion_refinement, 0.0},
      {criterion_exact_case, 0.0},          {criterion_determinism, 0.0},
  };
  for (const Entry& e : entries) {
    const auto start = clock_type::now();
    CriterionResult r = e.fn(cfg);
    r.seconds = std::chrono::duration<double>(clock_type::now() - start).count();
    if (e.time_limit > 0.0 && r.seconds >= e.time_limit) r.pass = false;
    out.push_back(std::move(r));
  }
  return out;
}

std::string selftest_csv(const std::vector<CriterionResult>& results) {
  std::string out = csv_line({"criterion", "name", "measured", "threshold", "pass"});
  for (const CriterionResult& r : results)
    out += csv_line({std::to_string(r.id), r.name, csv_num(r.measured), csv_num(r.threshold),
                     r.pass ? "1" : "0"});
  return out;
}

}  // namespace diagode
