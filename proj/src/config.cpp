#include "diagode/config.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "diagode/csvout.hpp"
#include "diagode/expr.hpp"
#include "diagode/instance_gen.hpp"
#include "diagode/parallel.hpp"
#include "diagode/selftest.hpp"

namespace diagode {

namespace {

using nlohmann::json;

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const std::exception& e) {
    fail(ErrorKind::config_error, std::string("configuration is not valid JSON: ") + e.what());
  }
}

cd json_complex(const json& j, const char* what) {
  if (j.is_number()) return cd(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return cd(j[0].get<double>(), j[1].get<double>());
  fail(ErrorKind::config_error, std::string(what) + " must be a number or [re, im]");
}

Expr parse_expr_cfg(const std::string& text, const char* what) {
  try {
    return Expr::parse(text);
  } catch (const Error& e) {
    fail(ErrorKind::config_error, std::string("bad expression for ") + what + ": " + e.what());
  }
}

GridFn expr_gridfn(const std::string& text, int grid_n, const char* what) {
  try {
    return to_gridfn(parse_expr_cfg(text, what), grid_n);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::config_error) throw;
    fail(ErrorKind::config_error, std::string("cannot sample ") + what + ": " + e.what());
  }
}

GridFn matrix_from_exprs(const json& rows, int grid_n, int dim, const char* what) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != dim)
    fail(ErrorKind::config_error, std::string(what) + " must be a " + std::to_string(dim) + "-row matrix");
  std::vector<GridFn> cells;
  cells.reserve(static_cast<std::size_t>(dim) * dim);
  for (const json& row : rows) {
    if (!row.is_array() || static_cast<int>(row.size()) != dim)
      fail(ErrorKind::config_error, std::string(what) + " rows must have matching length");
    for (const json& cell : row) cells.push_back(expr_gridfn(cell.get<std::string>(), grid_n, what));
  }
  const std::size_t stride = static_cast<std::size_t>(dim) * dim;
  std::vector<cd> values(stride * static_cast<std::size_t>(grid_n + 1));
  std::vector<cd> derivs(stride * static_cast<std::size_t>(grid_n + 1));
  for (int j = 0; j <= grid_n; ++j)
    for (std::size_t e = 0; e < stride; ++e) {
      values[stride * static_cast<std::size_t>(j) + e] = cells[e].scalar_at(j);
      derivs[stride * static_cast<std::size_t>(j) + e] = cells[e].deriv_at(j)[0];
    }
  return GridFn::from_samples(GridFn::Kind::matrix, dim, std::move(values), std::move(derivs), true);
}

std::vector<int> indices_from(const json& arr, int dim, const char* what) {
  if (!arr.is_array()) fail(ErrorKind::config_error, std::string(what) + " must be an index array");
  std::vector<int> out;
  for (const json& v : arr) {
    const int i = v.get<int>();
    if (i < 1 || i > dim) fail(ErrorKind::config_error, std::string(what) + " index out of range");
    out.push_back(i - 1);
  }
  return out;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  const json j = parse_json(text);
  RunConfig cfg;
  cfg.json_text = text;
  cfg.grid_n = j.value("grid_n", 1024);
  if (cfg.grid_n < 64 || !power_of_two(cfg.grid_n))
    fail(ErrorKind::config_error, "grid_n must be a power of two >= 64");
  cfg.contour_points = j.value("contour_points", 64);
  if (cfg.contour_points < 8) fail(ErrorKind::config_error, "contour_points must be at least 8");
  cfg.slack = j.value("slack", 0.05);
  cfg.tolerance = j.value("tolerance", 1e-10);
  cfg.seed = j.value("seed", static_cast<std::uint64_t>(0));
  cfg.sector = j.value("sector", 1);
  cfg.k = j.value("k", 1);
  cfg.side = j.value("side", std::string("left"));
  if (cfg.side != "left" && cfg.side != "right" && cfg.side != "both")
    fail(ErrorKind::config_error, "side must be left, right or both");
  if (j.contains("magnitudes")) {
    double prev = 0.0;
    for (const json& v : j["magnitudes"]) {
      const double m = v.get<double>();
      if (!(m > prev)) fail(ErrorKind::config_error, "magnitudes must be strictly increasing positive");
      cfg.magnitudes.push_back(m);
      prev = m;
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::config_error, "cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_run_config(text);
}

namespace {

CompanionSpec companion_from(const RunConfig& cfg) {
  const json j = parse_json(cfg.json_text);
  if (!j.contains("companion")) fail(ErrorKind::config_error, "missing companion block");
  const json& c = j["companion"];
  CompanionSpec spec;
  spec.n = c.value("n", 2);
  spec.grid_n = cfg.grid_n;
  if (c.contains("zeta")) spec.zeta = json_complex(c["zeta"], "zeta");
  if (!c.contains("p") || !c["p"].is_array() || static_cast<int>(c["p"].size()) != spec.n)
    fail(ErrorKind::config_error, "companion.p must list n profile expressions");
  for (const json& expr : c["p"]) spec.p.push_back(parse_expr_cfg(expr.get<std::string>(), "p"));
  if (c.contains("q")) {
    for (const json& entry : c["q"]) {
      const int k = entry.at("k").get<int>();
      const int l = entry.at("l").get<int>();
      if (k < 1 || k > spec.n || l < 1 || l > k)
        fail(ErrorKind::config_error, "companion.q indices must satisfy 1 <= l <= k <= n");
      spec.q[{k, l}] = parse_expr_cfg(entry.at("expr").get<std::string>(), "q");
    }
  }
  return spec;
}

ParamFamily family_from(const RunConfig& cfg) {
  const json j = parse_json(cfg.json_text);
  if (!j.contains("family")) fail(ErrorKind::config_error, "missing family block");
  const json& f = j["family"];
  ParamFamily fam;
  fam.dim = f.value("dim", 0);
  if (fam.dim < 1) fail(ErrorKind::config_error, "family.dim must be positive");
  if (!f.contains("blocks") || !f.contains("h"))
    fail(ErrorKind::config_error, "family needs blocks and h");
  for (const json& b : f["blocks"]) fam.blocks.push_back(indices_from(b, fam.dim, "family.blocks"));
  for (const json& expr : f["h"])
    fam.h.push_back(expr_gridfn(expr.get<std::string>(), cfg.grid_n, "family.h"));
  if (fam.blocks.size() != fam.h.size())
    fail(ErrorKind::config_error, "family.blocks and family.h must have matching length");
  if (f.contains("v"))
    fam.v = matrix_from_exprs(f["v"], cfg.grid_n, fam.dim, "family.v");
  else
    fam.v = GridFn::zeros(GridFn::Kind::matrix, cfg.grid_n, fam.dim);
  if (f.contains("direction")) {
    fam.direction = json_complex(f["direction"], "family.direction");
    const double mod = std::abs(fam.direction);
    if (!(mod > 0.0)) fail(ErrorKind::config_error, "family.direction must be nonzero");
    fam.direction /= mod;
  }
  fam.magnitudes = cfg.magnitudes;
  if (fam.magnitudes.empty()) fail(ErrorKind::config_error, "family command needs magnitudes");
  try {
    fam.validate();
  } catch (const Error& e) {
    fail(ErrorKind::config_error, std::string("invalid family: ") + e.what());
  }
  return fam;
}

PiFrame frame_from(const RunConfig& cfg) {
  const json j = parse_json(cfg.json_text);
  if (!j.contains("frame")) fail(ErrorKind::config_error, "missing frame block");
  const json& f = j["frame"];
  const int dim = f.value("dim", 0);
  if (dim < 1) fail(ErrorKind::config_error, "frame.dim must be positive");
  if (!f.contains("partition") || !f.contains("atoms") || !f.contains("c"))
    fail(ErrorKind::config_error, "frame needs partition, atoms and c");
  const json& pj = f["partition"];
  Partition part(dim, indices_from(pj.value("zero", json::array()), dim, "partition.zero"),
                 indices_from(pj.value("minus", json::array()), dim, "partition.minus"),
                 indices_from(pj.value("plus", json::array()), dim, "partition.plus"));
  std::vector<SpectralAtom> atoms;
  for (const json& a : f["atoms"]) {
    SpectralAtom atom{expr_gridfn(a.at("beta").get<std::string>(), cfg.grid_n, "atom.beta"),
                      indices_from(a.at("indices"), dim, "atom.indices"), 0};
    const std::string block = a.value("block", "zero");
    atom.block = block == "zero" ? 0 : block == "minus" ? 1 : block == "plus" ? 2 : -1;
    if (atom.block < 0) fail(ErrorKind::config_error, "atom.block must be zero, minus or plus");
    atoms.push_back(std::move(atom));
  }
  try {
    SpectralAtoms b(dim, std::move(atoms), part);
    GridFn c = matrix_from_exprs(f["c"], cfg.grid_n, dim, "frame.c");
    return PiFrame::make(part, std::move(b), std::move(c), true);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::config_error) throw;
    fail(ErrorKind::config_error, std::string("invalid frame: ") + e.what());
  }
}

std::vector<CommandOutput> run_frame(const RunConfig& cfg, int threads, bool strict) {
  const PiFrame frame = frame_from(cfg);
  TransformerOptions opts;
  opts.contour_points = cfg.contour_points;
  opts.slack = cfg.slack;
  opts.strict = strict;
  opts.threads = threads;
  const TransformerBundle bundle = build_transformer(frame, opts);
  const BoundReport& r = bundle.report;
  std::string csv = csv_line({"eq2_lhs", "eq2_rhs", "eq3_lhs", "eq3_rhs", "eq4_lhs", "eq4_rhs",
                              "eq5_lhs", "eq5_rhs"});
  csv += csv_line({csv_num(r.transformer_dev.lhs), csv_num(r.transformer_dev.rhs),
                   csv_num(r.inverse_dev.lhs), csv_num(r.inverse_dev.rhs), csv_num(r.sdot_l1.lhs),
                   csv_num(r.sdot_l1.rhs), csv_num(r.conjugation.lhs), csv_num(r.conjugation.rhs)});
  return {{"frame_bounds.csv", csv}};
}

std::vector<CommandOutput> run_family(const RunConfig& cfg, int threads, bool strict) {
  (void)strict;
  const ParamFamily fam = family_from(cfg);
  const int k = cfg.k - 1;
  if (k < 0 || k >= fam.block_count()) fail(ErrorKind::config_error, "k out of range for the family");
  const CVector xi = CVector::unit(fam.dim, fam.blocks[static_cast<std::size_t>(k)].front());
  SolveOptions opts;
  opts.contour_points = cfg.contour_points;
  opts.tol = cfg.tolerance;
  opts.threads = 1;

  std::vector<Side> sides;
  if (cfg.side == "left" || cfg.side == "both") sides.push_back(Side::left);
  if (cfg.side == "right" || cfg.side == "both") sides.push_back(Side::right);

  const int count = static_cast<int>(fam.magnitudes.size());
  std::string decay = csv_line({"magnitude", "k", "side", "rel_sup_error"});
  std::vector<std::string> rows(static_cast<std::size_t>(count));
  for (Side side : sides) {
    parallel_for(count, threads, [&](int nu) {
      const CompareResult r = asymptotic_compare(fam, nu, k, xi, side, opts);
      rows[static_cast<std::size_t>(nu)] =
          csv_line({csv_num(fam.magnitudes[static_cast<std::size_t>(nu)]), std::to_string(cfg.k),
                    side == Side::left ? "left" : "right", csv_num(r.rel_sup_error)});
    });
    for (const std::string& row : rows) decay += row;
  }

  std::string ref = csv_line({"magnitude", "k", "actual_gap", "refined_bound", "y_norm"});
  std::vector<std::string> ref_rows(static_cast<std::size_t>(count));
  parallel_for(count, threads, [&](int nu) {
    const RefineResult r = refine(fam, nu, k, xi, opts);
    ref_rows[static_cast<std::size_t>(nu)] =
        csv_line({csv_num(fam.magnitudes[static_cast<std::size_t>(nu)]), std::to_string(cfg.k),
                  csv_num(r.actual_gap), csv_num(r.refined_bound), csv_num(r.y_norm_c)});
  });
  for (const std::string& row : ref_rows) ref += row;

  return {{"family_decay.csv", decay}, {"family_refine.csv", ref}};
}

std::vector<CommandOutput> run_companion(const RunConfig& cfg, int threads, bool strict) {
  (void)strict;
  if (cfg.magnitudes.empty()) fail(ErrorKind::config_error, "companion command needs magnitudes");
  const SampledCompanion sc = [&] {
    try {
      return sample_companion(companion_from(cfg));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::config_error) throw;
      fail(ErrorKind::config_error, std::string("invalid companion spec: ") + e.what());
    }
  }();
  const SectorContext sec = sector_permutation(sc.n, cfg.sector);
  const Side side = cfg.side == "right" ? Side::right : Side::left;
  SolveOptions opts;
  opts.contour_points = cfg.contour_points;
  opts.tol = cfg.tolerance;
  opts.threads = threads;
  const std::vector<DecayRow> rows = verify_asymptotics(sc, sec, cfg.magnitudes, cfg.k, side, opts);
  std::string csv = csv_line({"magnitude", "rel_sup_error", "residual_l1", "scaled_residual"});
  for (const DecayRow& r : rows)
    csv += csv_line({csv_num(r.magnitude), csv_num(r.rel_sup_error), csv_num(r.residual_l1),
                     csv_num(r.scaled_residual)});
  return {{"companion_decay.csv", csv}};
}

std::vector<CommandOutput> run_bvp(const RunConfig& cfg, int threads, bool strict) {
  (void)threads;
  (void)strict;
  const json j = parse_json(cfg.json_text);
  const int max_dim = j.contains("bvp") ? j["bvp"].value("dim", 4) : 4;
  if (max_dim < 2 || max_dim > 16) fail(ErrorKind::config_error, "bvp.dim must lie in 2..16");
  Rng rng(cfg.seed);
  const AdmissibleBvp inst = random_admissible_bvp(rng, cfg.grid_n, max_dim);
  ContractionParams params;
  params.gamma = inst.gamma;
  params.theta = inst.theta;
  params.tol = cfg.tolerance;
  const ContractionResult sol = solve_contraction(inst.a, inst.v, inst.f, inst.p, inst.xi, params);
  GridFn apv = inst.a;
  apv += inst.v;
  const GridFn oracle = solve_direct(BvpProblem{apv, inst.f, inst.p, inst.xi});
  GridFn diff = sol.x;
  diff -= oracle;
  const double oracle_gap = norm_c(diff) / std::max(1.0, norm_c(oracle));
  GridFn gap = sol.x;
  gap -= sol.x0;
  const double bound = inst.theta / (1.0 - inst.theta) * norm_c(sol.x0);
  std::string csv = csv_line({"dim", "gamma", "theta", "iterations", "contraction_factor",
                              "oracle_gap", "gap", "gap_bound"});
  csv += csv_line({std::to_string(inst.a.dim()), csv_num(inst.gamma), csv_num(inst.theta),
                   std::to_string(sol.iterations), csv_num(sol.contraction_factor),
                   csv_num(oracle_gap), csv_num(norm_c(gap)), csv_num(bound)});
  return {{"bvp_report.csv", csv}};
}

std::vector<CommandOutput> run_selftest_cmd(const RunConfig& cfg, int threads, bool strict) {
  (void)strict;
  SelftestConfig scfg;
  scfg.seed = cfg.seed == 0 ? 12345 : cfg.seed;
  scfg.threads = threads;
  const std::vector<CriterionResult> results = run_selftest(scfg);
  bool all = true;
  for (const CriterionResult& r : results) {
    std::cerr << (r.pass ? "[PASS] " : "[FAIL] ") << "criterion " << r.id << " " << r.name
              << " measured=" << r.measured << " threshold=" << r.threshold << " (" << r.seconds
              << " s)\n";
    all = all && r.pass;
  }
  if (!all) fail(ErrorKind::bound_violation, "selftest criteria failed");
  return {{"selftest.csv", selftest_csv(results)}};
}

}  // namespace

std::vector<CommandOutput> run_command(const std::string& command, const RunConfig& cfg, int threads,
                                       bool strict) {
  if (command == "frame") return run_frame(cfg, threads, strict);
  if (command == "family") return run_family(cfg, threads, strict);
  if (command == "companion") return run_companion(cfg, threads, strict);
  if (command == "bvp") return run_bvp(cfg, threads, strict);
  if (command == "selftest") return run_selftest_cmd(cfg, threads, strict);
  fail(ErrorKind::config_error, "unknown command: " + command);
}

void write_outputs(const std::vector<CommandOutput>& outs, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  for (const CommandOutput& out : outs) {
    const std::filesystem::path path = std::filesystem::path(out_dir) / out.file_name;
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::config_error, "cannot write output file: " + path.string());
    f << out.csv;
    std::cout << "wrote " << path.string() << "\n";
  }
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"diagonalization-method toolkit for parameter-dependent linear ODE systems"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir = ".";
  int threads = 1;
  bool strict = false;
  for (const char* name : {"bvp", "frame", "family", "companion", "selftest"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "configuration file (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads");
    sub->add_flag("--strict", strict, "turn bound-violation warnings into failures");
  }

  std::vector<const char*> argv;
  argv.push_back("diagode");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    const RunConfig cfg = load_run_config(config_path);
    const std::string command = app.get_subcommands().front()->get_name();
    write_outputs(run_command(command, cfg, std::max(1, threads), strict), out_dir);
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::config_error:
        return 2;
      case ErrorKind::bound_violation:
        return 4;
      default:
        return 3;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace diagode
