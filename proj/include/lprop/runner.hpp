#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "lprop/config.hpp"
#include "lprop/numfmt.hpp"
#include "lprop/path.hpp"
#include "lprop/pde.hpp"
#include "lprop/reach.hpp"

namespace lprop {

struct RunOutput {
  std::vector<std::string> files;
};

namespace detail {

inline void validate_config_keys(const ExperimentConfig& cfg, int n) {
  // Exact keys plus the numbered operator/domain families.
  static const std::set<std::string> exact = {
      "operator.n",        "domain.kind",      "domain.ball_center",
      "domain.ball_radius", "grid.h",          "reach.x0",
      "reach.dt",          "reach.combined",   "reach.substeps",
      "reach.max_iterations", "reach.magnitudes", "pde.tol",
      "pde.maxiter",       "pde.boundary",     "harnack.k_box",
      "harnack.eps",       "path.target",      "path.method",
      "path.sample_dt",    "path.tol",         "check.depth",
      "check.samples",     "output.dir",       "output.precision"};
  cfg.for_each_key([&](const std::string& key, int line) {
    if (exact.count(key)) return;
    auto digit = [](char c) { return c >= '1' && c <= '9'; };
    if (key.size() == 12 && key.rfind("operator.a", 0) == 0 && digit(key[10]) &&
        digit(key[11]) && key[10] - '0' <= n && key[11] - '0' <= n)
      return;
    if (key.size() == 11 && key.rfind("operator.b", 0) == 0 && digit(key[10]) &&
        key[10] - '0' <= n)
      return;
    if (key.size() == 11 && key.rfind("domain.box", 0) == 0 && digit(key[10]) &&
        key[10] - '0' <= n)
      return;
    throw ConfigError(cfg.name() + ":" + std::to_string(line) + ": unknown key '" + key + "'");
  });
}

class ArtifactWriter {
 public:
  ArtifactWriter(std::string outdir, int precision)
      : outdir_(std::move(outdir)), precision_(precision) {
    std::filesystem::create_directories(outdir_);
  }

  std::string path(const std::string& filename) const {
    return (std::filesystem::path(outdir_) / filename).string();
  }

  std::ofstream open(const std::string& filename, RunOutput& out) const {
    const std::string p = path(filename);
    std::ofstream f(p, std::ios::binary);  // '\n' line endings everywhere
    if (!f) throw Error("cannot write " + p);
    out.files.push_back(p);
    return f;
  }

  std::string num(double v) const { return format_real(v, precision_); }

 private:
  std::string outdir_;
  int precision_;
};

struct RunInputs {
  OperatorSpec op;
  DomainSpec dom;
  std::vector<double> x0;
  double h = 0.0;
  ReachConfig reach_cfg;
  double pde_tol = 1e-10;
  std::int64_t pde_maxiter = 1000000;
  int check_depth = 3;
  int check_samples = 1000;

  RunInputs(const ExperimentConfig& cfg)
      : op(make_operator(cfg)), dom(make_domain(cfg, op.n)) {
    validate_config_keys(cfg, op.n);
    if (dom.dimension() != op.n)
      throw ConfigError("domain dimension does not match operator.n");
    x0 = cfg.get_list("reach.x0");
    if (static_cast<int>(x0.size()) != op.n)
      throw ConfigError(cfg.where("reach.x0") + ": expected " + std::to_string(op.n) +
                        " coordinates");
    h = cfg.get_real("grid.h");
    reach_cfg.dt = cfg.get_real("reach.dt", 0.0);
    reach_cfg.combined_directions = cfg.get_bool("reach.combined", false);
    reach_cfg.substeps = static_cast<int>(cfg.get_int("reach.substeps", 2));
    reach_cfg.max_iterations = static_cast<int>(cfg.get_int("reach.max_iterations", 100000));
    if (cfg.has("reach.magnitudes")) reach_cfg.magnitudes = cfg.get_list("reach.magnitudes");
    pde_tol = cfg.get_real("pde.tol", 1e-10);
    pde_maxiter = cfg.get_int("pde.maxiter", 1000000);
    check_depth = static_cast<int>(cfg.get_int("check.depth", 3));
    check_samples = static_cast<int>(cfg.get_int("check.samples", 1000));
  }
};

inline std::int64_t interior_cell_at(const DiscreteOperator& L, std::span<const double> p) {
  const auto cell = L.grid.locate(p);
  if (!cell) throw OutOfBox("point outside the grid bounding box");
  const std::int64_t node = L.cell_node[static_cast<std::size_t>(*cell)];
  if (node < 0 || L.node_is_boundary[static_cast<std::size_t>(node)])
    throw DomainError("point does not map to an interior node");
  return *cell;
}

inline std::string index_header(int n, const std::string& iprefix, const std::string& cprefix) {
  std::string s;
  for (int d = 1; d <= n; ++d) s += iprefix + std::to_string(d) + ",";
  for (int d = 1; d <= n; ++d) s += cprefix + std::to_string(d) + ",";
  return s;
}

inline void run_check(const RunInputs& in, const ArtifactWriter& w, RunOutput& out) {
  auto f = w.open("check.txt", out);
  const OperatorCheck oc = check_operator(in.op, in.dom, std::min(in.check_samples, 200));
  f << "symmetry = " << (oc.symmetric ? "ok" : "FAIL")
    << " (max_asymmetry = " << w.num(oc.max_asymmetry) << ")\n";
  f << "psd = " << (oc.positive_semidefinite ? "ok" : "FAIL")
    << " (min_eigenvalue = " << w.num(oc.min_eigenvalue) << ")\n";
  const H2Check h2 = check_h2(in.op, in.dom, in.check_samples);
  f << "h2 = " << (h2.holds ? "ok" : "FAIL") << " (inf_a11 = " << w.num(h2.sampled_inf)
    << ")\n";
  if (!h2.holds) {
    f << "barrier = skipped (h2 failed)\n";
    f.close();
    throw H2Violation("H2Violation: sampled inf a11 = " + format_real(h2.sampled_inf) +
                      " is not strictly positive");
  }
  const HoermanderResult hr = hoermander_rank_full(in.op, in.x0, in.check_depth);
  f << "hoermander_rank = " << hr.rank << " of " << in.op.n << " at depth "
    << in.check_depth << " (smallest_pivot = " << w.num(hr.smallest_pivot) << ") proxy "
    << (hr.rank == in.op.n ? "passed" : "failed") << "\n";
  const BarrierParams bp = barrier_params(in.op, in.dom, in.check_samples);
  f << "barrier_lambda = " << w.num(bp.lambda) << "\n";
  f << "barrier_M = " << w.num(bp.M) << "\n";
  try {
    const Grid grid = build_grid(in.dom, in.h);
    const DiscreteOperator L = discretize(in.op, grid);
    const BarrierReport br = check_barrier(L, bp);
    f << "barrier_min_w = " << w.num(br.min_w) << "\n";
    f << "barrier_max_interior_Lw = " << w.num(br.max_interior_Lw) << "\n";
    f << "barrier = " << (br.pass ? "ok" : "FAIL") << "\n";
  } catch (const NonDiagonalError&) {
    f << "barrier = skipped (non-diagonal coefficient matrix)\n";
  }
}

inline void run_fields(const RunInputs& in, const ArtifactWriter& w, RunOutput& out) {
  auto f = w.open("fields.csv", out);
  f << "field,component,expression\n";
  const FieldSet fs = vector_fields(in.op);
  for (int j = 0; j < in.op.n; ++j) {
    for (int k = 0; k < in.op.n; ++k)
      f << "X" << (j + 1) << "," << (k + 1) << ","
        << fs.X[static_cast<std::size_t>(j)].components[static_cast<std::size_t>(k)].simplified().to_string()
        << "\n";
  }
  for (int k = 0; k < in.op.n; ++k)
    f << "Y," << (k + 1) << ","
      << fs.Y.components[static_cast<std::size_t>(k)].simplified().to_string() << "\n";
}

inline void run_brackets(const RunInputs& in, const ArtifactWriter& w, RunOutput& out) {
  const FieldSet fs = vector_fields(in.op);
  const auto samples = QuasiSampler(in.dom).take(50);
  std::vector<std::pair<std::string, const VectorField*>> active;
  for (int j = 0; j < in.op.n; ++j)
    if (!field_vanishes_at(fs.X[static_cast<std::size_t>(j)], samples))
      active.push_back({"X" + std::to_string(j + 1), &fs.X[static_cast<std::size_t>(j)]});
  const bool has_drift = !field_vanishes_at(fs.Y, samples);

  auto csv = w.open("brackets.csv", out);
  csv << "bracket,component,expression\n";
  auto emit = [&](const std::string& name, const VectorField& br) {
    for (int k = 0; k < in.op.n; ++k)
      csv << name << "," << (k + 1) << ","
          << br.components[static_cast<std::size_t>(k)].to_string() << "\n";
  };
  for (std::size_t i = 0; i < active.size(); ++i) {
    for (std::size_t j = i + 1; j < active.size(); ++j)
      emit("[" + active[i].first + "," + active[j].first + "]",
           lie_bracket(*active[i].second, *active[j].second));
    if (has_drift)
      emit("[" + active[i].first + ",Y]", lie_bracket(*active[i].second, fs.Y));
  }

  auto txt = w.open("brackets.txt", out);
  for (int d = 1; d <= in.check_depth; ++d) {
    const HoermanderResult hr = hoermander_rank_full(in.op, in.x0, d);
    txt << "depth " << d << ": rank = " << hr.rank
        << " (fields = " << hr.fields_used
        << ", smallest_pivot = " << w.num(hr.smallest_pivot) << ")\n";
  }
}

inline ReachSet run_reach_compute(const RunInputs& in) {
  const Grid grid = build_grid(in.dom, in.h);
  return compute(in.op, grid, in.x0, in.reach_cfg);
}

inline void write_reach_csv(const ReachSet& rs, const ArtifactWriter& w, RunOutput& out) {
  auto f = w.open("reach.csv", out);
  f << index_header(rs.grid.n, "i", "x") << "reached,iteration\n";
  for (std::int64_t c = 0; c < rs.grid.total_cells; ++c) {
    if (!rs.grid.is_inside(c)) continue;
    const auto mi = rs.grid.multi_index(c);
    const auto x = rs.grid.center(c);
    for (int d = 0; d < rs.grid.n; ++d) f << mi[static_cast<std::size_t>(d)] << ",";
    for (int d = 0; d < rs.grid.n; ++d) f << w.num(x[static_cast<std::size_t>(d)]) << ",";
    f << int(rs.reached[static_cast<std::size_t>(c)]) << ","
      << rs.iteration[static_cast<std::size_t>(c)] << "\n";
  }
}

inline void run_reach(const RunInputs& in, const ArtifactWriter& w, RunOutput& out) {
  const ReachSet rs = run_reach_compute(in);
  write_reach_csv(rs, w, out);
  auto txt = w.open("reach.txt", out);
  txt << "inside_cells = " << rs.grid.inside_cells << "\n";
  txt << "reached_cells = " << rs.reached_count << "\n";
  txt << "reached_fraction = "
      << w.num(static_cast<double>(rs.reached_count) /
               static_cast<double>(rs.grid.inside_cells))
      << "\n";
  txt << "iteration_cap_hit = " << (rs.iteration_cap_hit ? "yes" : "no") << "\n";
}

inline void run_path(const ExperimentConfig& cfg, const RunInputs& in,
                     const ArtifactWriter& w, RunOutput& out) {
  const auto target = cfg.get_list("path.target");
  if (static_cast<int>(target.size()) != in.op.n)
    throw ConfigError(cfg.where("path.target") + ": expected " + std::to_string(in.op.n) +
                      " coordinates");
  const std::string method = cfg.get_string("path.method", "extract");
  const double sample_dt = cfg.get_real("path.sample_dt", 1e-3);
  const double tol = cfg.get_real("path.tol", 1e-3);

  PropagationPath path;
  if (method == "extract") {
    const ReachSet rs = run_reach_compute(in);
    path = extract(rs, target, in.op, rs.grid);
  } else if (method == "mumford") {
    if (in.dom.kind() != DomainSpec::Kind::BoxBall || in.op.n != 3 ||
        in.dom.box_intervals().size() != 1)
      throw ConfigError("path.method mumford expects a 3-d boxball domain");
    const Interval iv = in.dom.box_intervals()[0];
    if (std::fabs(iv.lo + iv.hi) > 1e-12)
      throw ConfigError("path.method mumford expects a symmetric x1 interval");
    for (double c : in.dom.ball_center())
      if (c != 0.0) throw ConfigError("path.method mumford expects a ball centered at 0");
    path = mumford_path(iv.hi, in.dom.ball_radius(), target, sample_dt);
  } else if (method == "ou") {
    if (in.dom.kind() != DomainSpec::Kind::Box || in.op.n != 2)
      throw ConfigError("path.method ou expects a 2-d box domain");
    const Interval x1 = in.dom.box_intervals()[0];
    const Interval x2 = in.dom.box_intervals()[1];
    if (std::fabs(x2.lo + x2.hi) > 1e-12)
      throw ConfigError("path.method ou expects a symmetric x2 interval");
    path = ou_path(x1, x2.hi, in.x0, target, sample_dt);
  } else {
    throw ConfigError("path.method must be extract, mumford or ou");
  }

  const PathValidation rep = validate(path, in.op, in.dom, tol);

  auto csv = w.open("path.csv", out);
  csv << "t,";
  for (int d = 1; d <= in.op.n; ++d) csv << "x" << d << ",";
  csv << "segment,";
  for (int d = 1; d <= in.op.n; ++d) csv << "lambda" << d << ",";
  csv << "mu\n";
  for (const auto& s : path.samples) {
    csv << w.num(s.t) << ",";
    for (int d = 0; d < in.op.n; ++d) csv << w.num(s.x[static_cast<std::size_t>(d)]) << ",";
    csv << s.segment << ",";
    if (s.segment >= 0) {
      const auto& seg = path.segments[static_cast<std::size_t>(s.segment)];
      for (int d = 0; d < in.op.n; ++d)
        csv << w.num(seg.lambda[static_cast<std::size_t>(d)]) << ",";
      csv << w.num(seg.mu) << "\n";
    } else {
      for (int d = 0; d < in.op.n; ++d) csv << "0,";
      csv << "0\n";
    }
  }

  auto txt = w.open("path.txt", out);
  txt << "segments = " << path.segments.size() << "\n";
  txt << "total_time = " << w.num(path.total_time()) << "\n";
  txt << "max_velocity_error = " << w.num(rep.max_velocity_error) << "\n";
  txt << "velocity_ok = " << (rep.velocity_ok ? "yes" : "no") << "\n";
  txt << "contained = " << (rep.contained ? "yes" : "no") << "\n";
  txt << "chained = " << (rep.chained ? "yes" : "no") << "\n";
  txt << "mu_nonnegative = " << (rep.mu_nonnegative ? "yes" : "no") << "\n";
  txt << "endpoint_error = " << w.num(rep.endpoint_error) << "\n";
  txt << "pass = " << (rep.pass() ? "yes" : "no") << "\n";
}

inline void run_solve(const ExperimentConfig& cfg, const RunInputs& in,
                      const ArtifactWriter& w, RunOutput& out) {
  const Grid grid = build_grid(in.dom, in.h);
  const DiscreteOperator L = discretize(in.op, grid);
  const BoundarySpec spec = make_boundary_spec(cfg, in.op.n);
  const auto g = boundary_data(L, [&](std::span<const double> x) { return spec(x); });
  const DiscreteSolution sol = solve(L, g, in.pde_tol, in.pde_maxiter);

  auto csv = w.open("solve.csv", out);
  csv << "node," << index_header(grid.n, "i", "x") << "boundary,value\n";
  for (std::int64_t v = 0; v < L.node_count(); ++v) {
    const std::int64_t c = L.node_cell[static_cast<std::size_t>(v)];
    const auto mi = grid.multi_index(c);
    const auto x = grid.center(c);
    csv << v << ",";
    for (int d = 0; d < grid.n; ++d) csv << mi[static_cast<std::size_t>(d)] << ",";
    for (int d = 0; d < grid.n; ++d) csv << w.num(x[static_cast<std::size_t>(d)]) << ",";
    csv << int(L.node_is_boundary[static_cast<std::size_t>(v)]) << ","
        << w.num(sol.value[static_cast<std::size_t>(v)]) << "\n";
  }

  auto txt = w.open("solve.txt", out);
  txt << "nodes = " << L.node_count() << "\n";
  txt << "interior_nodes = " << L.interior_nodes.size() << "\n";
  txt << "residual = " << w.num(sol.residual) << "\n";
  txt << "iterations = " << sol.iterations << "\n";
}

inline void run_measure(const RunInputs& in, const ArtifactWriter& w, RunOutput& out) {
  const Grid grid = build_grid(in.dom, in.h);
  const DiscreteOperator L = discretize(in.op, grid);
  const std::int64_t x0_cell = interior_cell_at(L, in.x0);
  const HarmonicMeasureRow row =
      harmonic_measure(L, L.cell_node[static_cast<std::size_t>(x0_cell)]);

  auto csv = w.open("measure.csv", out);
  csv << "boundary_node," << index_header(grid.n, "i", "x") << "weight\n";
  double min_w = std::numeric_limits<double>::infinity();
  for (std::size_t y = 0; y < L.boundary_nodes.size(); ++y) {
    const std::int64_t c = L.node_cell[static_cast<std::size_t>(L.boundary_nodes[y])];
    const auto mi = grid.multi_index(c);
    const auto x = grid.center(c);
    csv << L.boundary_nodes[y] << ",";
    for (int d = 0; d < grid.n; ++d) csv << mi[static_cast<std::size_t>(d)] << ",";
    for (int d = 0; d < grid.n; ++d) csv << w.num(x[static_cast<std::size_t>(d)]) << ",";
    csv << w.num(row.weight[y]) << "\n";
    min_w = std::min(min_w, row.weight[y]);
  }

  auto txt = w.open("measure.txt", out);
  txt << "atoms = " << L.boundary_nodes.size() << "\n";
  txt << "sum = " << w.num(row.sum) << "\n";
  txt << "min_weight = " << w.num(min_w) << "\n";
}

inline void run_harnack(const ExperimentConfig& cfg, const RunInputs& in,
                        const ArtifactWriter& w, RunOutput& out) {
  const Grid grid = build_grid(in.dom, in.h);
  const DiscreteOperator L = discretize(in.op, grid);
  const std::int64_t x0_cell = interior_cell_at(L, in.x0);

  const auto kb = cfg.get_list("harnack.k_box");
  if (kb.size() != static_cast<std::size_t>(2 * in.op.n))
    throw ConfigError(cfg.where("harnack.k_box") + ": expected 2n numbers");
  const double eps = cfg.get_real("harnack.eps", 1e-12);

  std::vector<std::int64_t> k_cells;
  for (std::int64_t c = 0; c < grid.total_cells; ++c) {
    const std::int64_t node = L.cell_node[static_cast<std::size_t>(c)];
    if (node < 0 || L.node_is_boundary[static_cast<std::size_t>(node)]) continue;
    const auto x = grid.center(c);
    bool inside = true;
    for (int d = 0; d < in.op.n; ++d) {
      if (x[static_cast<std::size_t>(d)] < kb[static_cast<std::size_t>(2 * d)] ||
          x[static_cast<std::size_t>(d)] > kb[static_cast<std::size_t>(2 * d + 1)]) {
        inside = false;
        break;
      }
    }
    if (inside) k_cells.push_back(c);
  }
  if (k_cells.empty()) throw DomainError("harnack.k_box contains no interior cells");

  const HarnackEstimate est =
      harnack_ratio(L, x0_cell, k_cells, eps, in.pde_tol, in.pde_maxiter);

  auto txt = w.open("harnack.txt", out);
  txt << "ratio = " << (est.infinite ? std::string("INF") : w.num(est.ratio)) << "\n";
  auto coords = [&](std::int64_t node) {
    return node < 0 ? std::string("none")
                    : format_point(grid.center(L.node_cell[static_cast<std::size_t>(node)]));
  };
  txt << "witness_boundary = " << coords(est.witness_boundary_node) << "\n";
  txt << "witness_k = " << coords(est.witness_k_node) << "\n";
  txt << "eps = " << w.num(eps) << "\n";
  txt << "h = " << w.num(in.h) << "\n";
  txt << "k_cells = " << k_cells.size() << "\n";
}

inline void run_absorbent(const RunInputs& in, const ArtifactWriter& w, RunOutput& out) {
  const Grid grid = build_grid(in.dom, in.h);
  const DiscreteOperator L = discretize(in.op, grid);
  const std::int64_t x0_cell = interior_cell_at(L, in.x0);
  const auto hull = absorbent_hull(L, x0_cell);

  auto csv = w.open("absorbent.csv", out);
  csv << "cell," << index_header(grid.n, "i", "x") << "boundary\n";
  for (const std::int64_t c : hull) {
    const auto mi = grid.multi_index(c);
    const auto x = grid.center(c);
    csv << c << ",";
    for (int d = 0; d < grid.n; ++d) csv << mi[static_cast<std::size_t>(d)] << ",";
    for (int d = 0; d < grid.n; ++d) csv << w.num(x[static_cast<std::size_t>(d)]) << ",";
    const std::int64_t node = L.cell_node[static_cast<std::size_t>(c)];
    csv << int(L.node_is_boundary[static_cast<std::size_t>(node)]) << "\n";
  }
}

inline void run_lift(const RunInputs& in, const ArtifactWriter& w, RunOutput& out) {
  const OperatorSpec lop = lift(in.op);
  auto txt = w.open("lift.txt", out);
  txt << "n = " << lop.n << "\n";
  for (int i = 0; i < lop.n; ++i)
    for (int j = 0; j < lop.n; ++j) {
      const Expr e = lop.A(i, j).simplified();
      if (e.is_constant(0.0)) continue;
      txt << "a" << (i + 1) << (j + 1) << " = " << e.to_string() << "\n";
    }
  for (int i = 0; i < lop.n; ++i) {
    const Expr e = lop.b[static_cast<std::size_t>(i)].simplified();
    if (e.is_constant(0.0)) continue;
    txt << "b" << (i + 1) << " = " << e.to_string() << "\n";
  }
  std::vector<double> x0_lifted = in.x0;
  x0_lifted.push_back(0.0);
  const HoermanderResult hr = hoermander_rank_full(lop, x0_lifted, in.check_depth);
  txt << "hoermander_rank = " << hr.rank << " of " << lop.n << " at depth "
      << in.check_depth << "\n";
}

}  // namespace detail

/// Dispatch one subcommand against a parsed config, writing the artifact
/// files into `outdir`. Throws on module errors; the CLI maps exception
/// types onto exit codes.
inline RunOutput run_subcommand(const std::string& sub, const ExperimentConfig& cfg,
                                const std::string& outdir) {
  RunOutput out;
  detail::RunInputs in(cfg);
  const int precision = static_cast<int>(cfg.get_int("output.precision", 12));
  detail::ArtifactWriter w(outdir, precision);

  if (sub == "check") {
    detail::run_check(in, w, out);
  } else if (sub == "fields") {
    detail::run_fields(in, w, out);
  } else if (sub == "brackets") {
    detail::run_brackets(in, w, out);
  } else if (sub == "reach") {
    detail::run_reach(in, w, out);
  } else if (sub == "path") {
    detail::run_path(cfg, in, w, out);
  } else if (sub == "solve") {
    detail::run_solve(cfg, in, w, out);
  } else if (sub == "measure") {
    detail::run_measure(in, w, out);
  } else if (sub == "harnack") {
    detail::run_harnack(cfg, in, w, out);
  } else if (sub == "absorbent") {
    detail::run_absorbent(in, w, out);
  } else if (sub == "lift") {
    detail::run_lift(in, w, out);
  } else {
    throw ConfigError("unknown subcommand '" + sub +
                      "' (expected check, fields, brackets, reach, path, solve, "
                      "measure, harnack, absorbent or lift)");
  }
  return out;
}

}  // namespace lprop
