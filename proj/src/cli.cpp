#include "strb/cli.hpp"

#include "strb/config.hpp"
#include "strb/csvio.hpp"
#include "strb/model_io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>

namespace strb {

namespace {

namespace fs = std::filesystem;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

BoundCase effective_bound_case(const RunConfig& c, const OcpProblem& p) {
  return c.bound_case ? bound_case_from_string(*c.bound_case) : p.bound_case;
}

std::string out_path(const RunConfig& c, const std::string& name) {
  fs::create_directories(c.out_dir);
  return (fs::path(c.out_dir) / name).string();
}

std::string mu_str(const Mu& mu) {
  return "(" + fmt_sci(mu[0]) + ", " + fmt_sci(mu[1]) + ", " + fmt_sci(mu[2]) + ")";
}

struct Setup {
  Mesh mesh;
  OcpProblem prob;
  TimeGrid grid;
  bool unsteady = false;
};

Setup make_setup(const RunConfig& c) {
  Setup s;
  s.mesh = build_structured_mesh(c.nx, c.ny, geometry_for(c.problem));
  s.prob = instantiate_problem(c.problem, s.mesh);
  s.grid = TimeGrid{c.T, c.n_t};
  s.unsteady = c.mode == "unsteady";
  return s;
}

int cmd_mesh_info(const RunConfig& c, std::ostream& out) {
  Mesh mesh = build_structured_mesh(c.nx, c.ny, geometry_for(c.problem));
  FeSpace fe = make_fe_space(mesh);

  out << "mesh: problem=" << c.problem << " nx=" << c.nx << " ny=" << c.ny << "\n";
  out << "  nodes=" << mesh.nodes.size() << " triangles=" << mesh.tris.size()
      << " boundary_edges=" << mesh.boundary.size() << "\n";
  out << "  dofs=" << fe.n_dofs << " free=" << fe.n_free()
      << " dirichlet=" << fe.dirichlet_dofs.size() << "\n";
  out << "  hash=" << std::hex << std::setw(16) << std::setfill('0') << mesh_hash(mesh) << std::dec
      << std::setfill(' ') << "\n";
  for (int t : {tag::background, tag::omega1, tag::omega2, tag::omega3, tag::omega4})
    if (has_region_tag(mesh, t))
      out << "  region " << t << ": area=" << fmt_sci(region_area(mesh, {t})) << "\n";
  std::map<int, int> edge_counts;
  for (const auto& e : mesh.boundary) ++edge_counts[e.tag];
  for (const auto& [t, n] : edge_counts) out << "  boundary " << t << ": edges=" << n << "\n";

  if (c.mesh_dump) {
    {
      std::ofstream os(out_path(c, "mesh_nodes.csv"));
      CsvWriter w(os, {"node", "x", "y"});
      for (std::size_t i = 0; i < mesh.nodes.size(); ++i)
        w.row({std::to_string(i), fmt_sci(mesh.nodes[i][0]), fmt_sci(mesh.nodes[i][1])});
    }
    std::ofstream os(out_path(c, "mesh_triangles.csv"));
    CsvWriter w(os, {"triangle", "n0", "n1", "n2", "region"});
    for (std::size_t i = 0; i < mesh.tris.size(); ++i)
      w.row({std::to_string(i), std::to_string(mesh.tris[i][0]), std::to_string(mesh.tris[i][1]),
             std::to_string(mesh.tris[i][2]), std::to_string(mesh.tri_tag[i])});
    out << "  wrote mesh_nodes.csv, mesh_triangles.csv\n";
  }
  return 0;
}

int cmd_hf_solve(const RunConfig& c, std::ostream& out) {
  Setup s = make_setup(c);
  const Mu mu = c.hf.mu ? *c.hf.mu : s.prob.box.midpoint();
  if (!c.extrapolate_mu && !s.prob.box.contains(mu))
    throw ConfigError("hf.mu outside the parameter box (set extrapolate_mu to override)");

  const auto t0 = std::chrono::steady_clock::now();
  SpaceTimeBlockSystem sys =
      s.unsteady ? assemble_hf_system(s.prob, mu, s.grid, c.alpha, c.extrapolate_mu)
                 : assemble_steady_system(s.prob, mu, c.alpha, c.extrapolate_mu);
  Snapshot snap = solve_hf(sys, "hf-solve");
  const double secs = seconds_since(t0);
  const double J = cost_functional(s.prob, mu, c.alpha, sys, snap, c.extrapolate_mu);

  out << "hf-solve: problem=" << c.problem << " mode=" << c.mode << " mu=" << mu_str(mu)
      << " alpha=" << fmt_sci(c.alpha) << "\n";
  out << "  dofs=" << 2 * sys.n_total() << " cost=" << fmt_sci(J)
      << " seconds=" << fmt_sci(secs) << "\n";

  if (c.hf.export_csv) {
    std::ofstream os(out_path(c, "snapshot.csv"));
    CsvWriter w(os, {"time_index", "node", "y", "p"});
    const int nf = s.prob.fe.n_free();
    for (int k = 0; k < sys.n_t; ++k) {
      Vec yk = extend_to_full(snap.y.segment(static_cast<Eigen::Index>(k) * nf, nf), s.prob.fe,
                              &s.prob.lifting);
      Vec pk = extend_to_full(snap.p.segment(static_cast<Eigen::Index>(k) * nf, nf), s.prob.fe);
      for (int i = 0; i < s.prob.fe.n_dofs; ++i)
        w.row({std::to_string(k), std::to_string(i), fmt_sci(yk[i]), fmt_sci(pk[i])});
    }
    out << "  wrote snapshot.csv\n";
  }
  return 0;
}

void write_error_table(const ErrorReport& rep, const std::string& path) {
  std::ofstream os(path);
  CsvWriter w(os, {"N", "err_rel", "err_abs", "delta_mean", "eta_mean", "bound_kind"});
  for (const auto& r : rep.rows)
    w.row({std::to_string(r.n), fmt_sci(r.err_rel_mean), fmt_sci(r.err_abs_mean),
           fmt_sci(r.delta_mean), fmt_sci(r.eta_mean), r.bound_kind});
}

int cmd_greedy(const RunConfig& c, const std::string& model_override, std::ostream& out) {
  Setup s = make_setup(c);

  GreedyOptions opts;
  opts.tol = c.tol;
  opts.max_iters = c.max_iters;
  opts.alpha = c.alpha;
  opts.bound_case = effective_bound_case(c, s.prob);
  opts.unsteady = s.unsteady;
  opts.grid = s.grid;
  opts.log = &out;

  std::vector<Mu> training = make_training_grid(s.prob, c.n_train);
  out << "greedy: problem=" << c.problem << " mode=" << c.mode << " training=" << training.size()
      << " tol=" << fmt_sci(c.tol) << " alpha=" << fmt_sci(c.alpha)
      << " bound_case=" << to_string(opts.bound_case) << "\n";

  ReducedModel model;
  const auto t0 = std::chrono::steady_clock::now();
  GreedyHistory hist = greedy_build(model, s.prob, training, opts);
  const double secs = seconds_since(t0);

  {
    std::ofstream os(out_path(c, "greedy_history.csv"));
    CsvWriter w(os, {"iteration", "N", "mu1", "mu2", "mu3", "delta_max"});
    for (const auto& r : hist.iters)
      w.row({std::to_string(r.iteration), std::to_string(r.n_snapshots), fmt_sci(r.mu[0]),
             fmt_sci(r.mu[1]), fmt_sci(r.mu[2]), fmt_sci(r.delta_max)});
  }

  const std::string model_path =
      model_override.empty() ? out_path(c, "model.bin") : model_override;
  save_model(model, model_path);

  out << "greedy: N=" << model.n_snapshots() << " basis_cols=" << model.n_cols()
      << " converged=" << (hist.converged ? "yes" : "no")
      << " final_delta_max=" << fmt_sci(hist.final_delta_max) << " seconds=" << fmt_sci(secs)
      << "\n";
  out << "greedy: wrote greedy_history.csv and " << model_path << "\n";

  if (c.n_test > 0) {
    std::vector<Mu> tests = sample_test_set(s.prob.box, c.n_test, c.seed);
    ErrorReport rep = error_analysis(model, tests, c.exact_eta);
    write_error_table(rep, out_path(c, "error_table.csv"));
    out << "greedy: wrote error_table.csv over " << tests.size() << " test parameters\n";
  }

  if (hist.stagnated)
    throw NumericalError("greedy stagnated: selected snapshot added no new direction");
  return 0;
}

int cmd_online(const RunConfig& c, const std::string& model_path, std::ostream& out) {
  Setup s = make_setup(c);
  const std::string path = model_path.empty() ? out_path(c, "model.bin") : model_path;
  ReducedModel model = load_model(path, s.prob);

  std::vector<Mu> mus = c.online.mu;
  if (mus.empty() && c.n_test > 0) mus = sample_test_set(s.prob.box, c.n_test, c.seed);

  std::ofstream os(out_path(c, "online.csv"));
  CsvWriter w(os, {"mu1", "mu2", "mu3", "cost", "delta_n", "solve_seconds"});

  double total_solve = 0.0;
  for (const Mu& mu : mus) {
    const auto t0 = std::chrono::steady_clock::now();
    Vec coeffs = model.reduced_solve(mu);
    const double delta = model.delta_n(mu, coeffs);
    const double secs = seconds_since(t0);
    total_solve += secs;

    Vec y, p;
    model.reconstruct(coeffs, y, p);
    SpaceTimeBlockSystem sys = model.unsteady
                                   ? assemble_hf_system(s.prob, mu, model.grid, model.alpha)
                                   : assemble_steady_system(s.prob, mu, model.alpha);
    const double J = cost_functional(s.prob, mu, model.alpha, sys, Snapshot{y, p});
    w.row({fmt_sci(mu[0]), fmt_sci(mu[1]), fmt_sci(mu[2]), fmt_sci(J), fmt_sci(delta),
           fmt_sci(secs)});
  }

  out << "online: model=" << path << " N=" << model.n_snapshots() << " evaluations=" << mus.size()
      << "\n";
  if (!mus.empty())
    out << "online: mean_solve_seconds=" << fmt_sci(total_solve / static_cast<double>(mus.size()))
        << "\n";

  if (c.online.compare_hf && !mus.empty()) {
    SpaceTimeBlockSystem sys = model.unsteady
                                   ? assemble_hf_system(s.prob, mus.front(), model.grid, model.alpha)
                                   : assemble_steady_system(s.prob, mus.front(), model.alpha);
    const auto t0 = std::chrono::steady_clock::now();
    Snapshot snap = solve_hf(sys, "online comparison");
    const double hf_secs = seconds_since(t0);
    (void)snap;
    const double mean_red = total_solve / static_cast<double>(mus.size());
    out << "online: hf_seconds=" << fmt_sci(hf_secs) << " speedup=" << fmt_sci(hf_secs / mean_red)
        << "\n";
  }
  out << "online: wrote online.csv\n";
  return 0;
}

int cmd_sweep(const RunConfig& c, std::ostream& out) {
  Setup s = make_setup(c);
  const BoundCase bc = effective_bound_case(c, s.prob);

  std::vector<double> mu1_grid;
  const int n = c.sweep.mu1_points;
  for (int i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.5 : static_cast<double>(i) / (n - 1);
    mu1_grid.push_back(s.prob.box.lo[0] + t * (s.prob.box.hi[0] - s.prob.box.lo[0]));
  }
  const Mu mid = s.prob.box.midpoint();
  const double mu2 = c.sweep.mu2 ? *c.sweep.mu2 : mid[1];
  const double mu3 = c.sweep.mu3 ? *c.sweep.mu3 : mid[2];

  out << "sweep: problem=" << c.problem << " mode=" << c.mode << " points=" << n
      << " alphas=" << c.sweep.alphas.size() << " bound_case=" << to_string(bc) << "\n";

  StabilityReport rep = infsup_sweep(s.prob, mu1_grid, mu2, mu3, c.sweep.alphas,
                                     s.unsteady ? &s.grid : nullptr, bc);

  std::ofstream os(out_path(c, "infsup_sweep.csv"));
  CsvWriter w(os, {"mu1", "mu2", "mu3", "alpha", "beta_lb", "beta_exact", "rigor", "mode"});
  for (const auto& r : rep.rows)
    w.row({fmt_sci(r.mu[0]), fmt_sci(r.mu[1]), fmt_sci(r.mu[2]), fmt_sci(r.alpha),
           fmt_sci(r.beta_lower), fmt_sci(r.beta_ex), fmt_sci(r.ratio), rep.mode});
  out << "sweep: wrote infsup_sweep.csv (" << rep.rows.size() << " rows)\n";
  return 0;
}

int cmd_report(const std::string& table_path, std::ostream& out) {
  CsvTable t = CsvTable::read_file(table_path);
  const int c_n = t.column("N");
  const int c_rel = t.column("err_rel");
  const int c_abs = t.column("err_abs");
  const int c_delta = t.column("delta_mean");
  const int c_eta = t.column("eta_mean");
  const int c_kind = t.column("bound_kind");

  out << std::left << std::setw(6) << "N" << std::setw(10) << "bound" << std::right
      << std::setw(14) << "err_rel" << std::setw(14) << "err_abs" << std::setw(14) << "delta"
      << std::setw(14) << "eta" << "\n";
  for (const auto& row : t.rows)
    out << std::left << std::setw(6) << row[c_n] << std::setw(10) << row[c_kind] << std::right
        << std::setw(14) << row[c_rel] << std::setw(14) << row[c_abs] << std::setw(14)
        << row[c_delta] << std::setw(14) << row[c_eta] << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"certified space-time reduced-basis solver for parametrized optimal control"};
  app.require_subcommand(1);

  std::string config_path, out_override, model_path;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", config_path, "JSON configuration file");
    if (config_required) opt->required();
    sub->add_option("--out", out_override, "output directory override");
    return sub;
  };

  auto* sc_mesh = add_common(app.add_subcommand("mesh-info", "mesh and dof statistics"), true);
  auto* sc_hf = add_common(app.add_subcommand("hf-solve", "one high-fidelity solve"), true);
  auto* sc_greedy = add_common(app.add_subcommand("greedy", "offline greedy basis build"), true);
  sc_greedy->add_option("--model", model_path, "model output path");
  auto* sc_online = add_common(app.add_subcommand("online", "certified reduced evaluations"), true);
  sc_online->add_option("--model", model_path, "model input path");
  auto* sc_sweep = add_common(app.add_subcommand("sweep", "inf-sup bound sweep"), true);
  auto* sc_report =
      add_common(app.add_subcommand("report", "render error_table.csv as text"), false);
  std::string table_path;
  sc_report->add_option("--table", table_path, "error table path (default <out>/error_table.csv)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "argument error: " << e.what() << "\n";
    return 2;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = parse_config_file(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;

    if (sc_mesh->parsed()) return cmd_mesh_info(cfg, out);
    if (sc_hf->parsed()) return cmd_hf_solve(cfg, out);
    if (sc_greedy->parsed()) return cmd_greedy(cfg, model_path, out);
    if (sc_online->parsed()) return cmd_online(cfg, model_path, out);
    if (sc_sweep->parsed()) return cmd_sweep(cfg, out);
    if (sc_report->parsed()) {
      const std::string path =
          !table_path.empty()
              ? table_path
              : (std::filesystem::path(cfg.out_dir) / "error_table.csv").string();
      return cmd_report(path, out);
    }
    err << "no subcommand selected\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace strb
