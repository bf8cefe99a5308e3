#include "bigrid/cli.hpp"

#include "bigrid/errors.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

namespace bigrid {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

std::vector<double> parse_list(const std::string& s, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (item.empty() || used != item.size() || !std::isfinite(v))
      throw CLI::ValidationError(flag, "'" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw CLI::ValidationError(flag, "empty list");
  return out;
}

const char* rd_f_name(RdConfig::Nonlinearity f) { return f == RdConfig::Nonlinearity::cubic ? "cubic" : "zero"; }
const char* rd_bc_name(RdConfig::Boundary b) { return b == RdConfig::Boundary::neumann ? "neumann" : "dirichlet"; }

} // namespace

ParseOutcome parse_args(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("bigrid");
  for (const auto& a : args) argv.push_back(a.c_str());
  return parse_args(static_cast<int>(argv.size()), argv.data());
}

ParseOutcome parse_args(int argc, const char* const* argv) {
  ParseOutcome res;
  CLI::App app{"Projection and bi-grid Navier-Stokes solver on the unit square", "bigrid"};
  std::string case_name = "cavity", scheme_name = "bigrid1", tau_s = "0.5", dt_s = "0.01", out_dir = "out";
  std::string rd_f = "cubic", rd_bc = "dirichlet", rd_scheme = "stabilized";
  double re = 100.0, alpha = 1.0, picard_tol = 1e-8, blowup = 1e3, horizon = 5.0, amplitude = 0.1;
  std::optional<double> tf, theta_s;
  int coarse_n = 40, fine_n = 80, picard_max = 50, vtk_every = 0;
  bool scan = false, seedless = false, dump_raw = false, algo3_literal = false, no_csv = false;

  app.add_option("--case", case_name, "cavity | bercovier | rd")->check(CLI::IsMember({"cavity", "bercovier", "rd"}));
  app.add_option("--scheme", scheme_name, "reference | incremental | semi-implicit | bigrid1..bigrid4")
      ->check(CLI::IsMember({"reference", "incremental", "semi-implicit", "semi_implicit", "bigrid1", "bigrid2",
                             "bigrid3", "bigrid4"}));
  app.add_option("--re", re, "Reynolds number")->check(CLI::PositiveNumber);
  app.add_option("--dt", dt_s, "time step (comma list with --scan)");
  app.add_option("--tau", tau_s, "stabilization parameter (comma list with --scan)");
  app.add_option("--alpha", alpha, "incremental pressure coefficient")->check(CLI::PositiveNumber);
  app.add_option("--tf", tf, "final time");
  app.add_option("--coarse-n", coarse_n, "coarse cells per side")->check(CLI::Range(2, 1 << 14));
  app.add_option("--fine-n", fine_n, "fine cells per side")->check(CLI::Range(2, 1 << 15));
  app.add_option("--theta-s", theta_s, "switch to the reference scheme once dudt_l2 <= theta_s");
  app.add_option("--picard-tol", picard_tol, "relative Picard increment tolerance")->check(CLI::PositiveNumber);
  app.add_option("--picard-max", picard_max, "maximum Picard iterations")->check(CLI::PositiveNumber);
  app.add_option("--blowup-threshold", blowup, "instability cutoff on max |coefficient|")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--vtk-every", vtk_every, "write VTK every N steps and at the end")->check(CLI::PositiveNumber);
  app.add_flag("--no-csv", no_csv, "skip the CSV time series");
  app.add_flag("--scan", scan, "stability scan over the --tau and --dt lists");
  app.add_option("--scan-horizon", horizon, "integration horizon of each scan cell")->check(CLI::PositiveNumber);
  app.add_flag("--seedless", seedless, "deterministic defaults (no randomized input)");
  app.add_flag("--dump-raw", dump_raw, "write full coefficient arrays");
  app.add_flag("--algo3-literal", algo3_literal, "implicit fine convection in bigrid3");
  app.add_option("--rd-f", rd_f, "zero | cubic")->check(CLI::IsMember({"zero", "cubic"}));
  app.add_option("--rd-boundary", rd_bc, "dirichlet | neumann")->check(CLI::IsMember({"dirichlet", "neumann"}));
  app.add_option("--rd-scheme", rd_scheme, "plain | stabilized")->check(CLI::IsMember({"plain", "stabilized"}));
  app.add_option("--rd-amplitude", amplitude, "amplitude of the initial sin(pi x) sin(pi y)");

  if (argc <= 1) {
    res.exit_code = 2;
    res.message = app.help();
    return res;
  }
  try {
    app.parse(argc, argv);
    if (fine_n != 2 * coarse_n)
      throw CLI::ValidationError("--fine-n", "must equal 2 * --coarse-n (nested meshes)");
    const auto taus = parse_list(tau_s, "--tau");
    const auto dts = parse_list(dt_s, "--dt");
    if (!scan && (taus.size() != 1 || dts.size() != 1))
      throw CLI::ValidationError("--tau/--dt", "lists are only accepted with --scan");

    CliOptions o;
    o.spec = {parse_case_kind(case_name), re};
    o.cfg.scheme = parse_scheme(scheme_name);
    o.cfg.nu = 1.0 / re;
    o.cfg.dt = dts.front();
    o.cfg.tau = taus.front();
    o.cfg.alpha = alpha;
    o.cfg.theta_s = theta_s;
    o.cfg.picard_tol = picard_tol;
    o.cfg.picard_max = picard_max;
    o.cfg.blowup_threshold = blowup;
    o.cfg.algo3_literal = algo3_literal;
    o.cfg.T = tf ? *tf : (o.spec.kind == CaseSpec::Kind::cavity ? default_final_time(re) : 1.0);
    o.coarse_n = coarse_n;
    o.fine_n = fine_n;
    o.output.out_dir = out_dir;
    o.output.write_vtk = vtk_every > 0;
    o.output.vtk_every = vtk_every;
    o.output.write_csv = !no_csv;
    o.output.dump_raw = dump_raw;
    o.scan = scan;
    o.scan_taus = taus;
    o.scan_dts = dts;
    o.scan_horizon = horizon;
    o.seedless = seedless;
    o.rd.dt = o.cfg.dt;
    o.rd.tau = o.cfg.tau;
    o.rd.T = o.cfg.T;
    o.rd.f = rd_f == "cubic" ? RdConfig::Nonlinearity::cubic : RdConfig::Nonlinearity::zero;
    o.rd.boundary = rd_bc == "neumann" ? RdConfig::Boundary::neumann : RdConfig::Boundary::dirichlet_zero;
    o.rd.blowup_threshold = blowup;
    o.rd_stabilized = rd_scheme == "stabilized";
    o.rd_amplitude = amplitude;
    if (!scan) {
      SchemeConfig check = o.cfg;
      check.validate();
    }
    res.options = std::move(o);
  } catch (const CLI::CallForHelp&) {
    res.exit_code = 0;
    res.message = app.help();
  } catch (const CLI::ParseError& e) {
    res.exit_code = 2;
    res.message = std::string(e.what()) + "\n" + app.help();
  } catch (const InvalidParameter& e) {
    res.exit_code = 2;
    res.message = std::string(e.what()) + "\n" + app.help();
  }
  return res;
}

std::vector<std::string> canonical_args(const CliOptions& o) {
  auto join = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
    return s;
  };
  std::vector<std::string> a{"--case",
                             to_string(o.spec.kind),
                             "--scheme",
                             to_string(o.cfg.scheme),
                             "--re",
                             num(o.spec.Re),
                             "--dt",
                             o.scan ? join(o.scan_dts) : num(o.cfg.dt),
                             "--tau",
                             o.scan ? join(o.scan_taus) : num(o.cfg.tau),
                             "--alpha",
                             num(o.cfg.alpha),
                             "--tf",
                             num(o.cfg.T),
                             "--coarse-n",
                             std::to_string(o.coarse_n),
                             "--fine-n",
                             std::to_string(o.fine_n),
                             "--picard-tol",
                             num(o.cfg.picard_tol),
                             "--picard-max",
                             std::to_string(o.cfg.picard_max),
                             "--blowup-threshold",
                             num(o.cfg.blowup_threshold),
                             "--out",
                             o.output.out_dir.string(),
                             "--scan-horizon",
                             num(o.scan_horizon),
                             "--rd-f",
                             rd_f_name(o.rd.f),
                             "--rd-boundary",
                             rd_bc_name(o.rd.boundary),
                             "--rd-scheme",
                             o.rd_stabilized ? "stabilized" : "plain",
                             "--rd-amplitude",
                             num(o.rd_amplitude)};
  if (o.cfg.theta_s) {
    a.push_back("--theta-s");
    a.push_back(num(*o.cfg.theta_s));
  }
  if (o.output.write_vtk) {
    a.push_back("--vtk-every");
    a.push_back(std::to_string(o.output.vtk_every));
  }
  if (!o.output.write_csv) a.push_back("--no-csv");
  if (o.scan) a.push_back("--scan");
  if (o.seedless) a.push_back("--seedless");
  if (o.output.dump_raw) a.push_back("--dump-raw");
  if (o.cfg.algo3_literal) a.push_back("--algo3-literal");
  return a;
}

std::string canonical_echo(const CliOptions& o) {
  std::string s;
  for (const auto& a : canonical_args(o)) {
    if (!s.empty()) s += ' ';
    s += a;
  }
  return s;
}

void write_csv_series(const RunReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "step,time,dudt_l2,picard_iters,wall_s,phase_coarse_s,phase_fine_s,phase_pressure_s,switched,err_u_l2,err_p_l2\n";
  for (const auto& s : report.steps) {
    out << s.step << ',' << csv_num(s.time) << ',' << csv_num(s.dudt_norm) << ',' << (s.picard_iters + s.coarse_picard_iters)
        << ',' << csv_num(s.wall_seconds) << ',' << csv_num(s.phases.coarse) << ',' << csv_num(s.phases.fine) << ','
        << csv_num(s.phases.pressure) << ',' << (s.switched ? 1 : 0) << ',' << (s.err_u ? csv_num(*s.err_u) : "") << ','
        << (s.err_p ? csv_num(*s.err_p) : "") << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_vtk_fields(const VelocityField& u, const PressureField& p, const PressureField& vort,
                      const PressureField& stream, const std::filesystem::path& path) {
  if (!u.space || !p.space || !vort.space || !stream.space) throw InvalidParameter("write_vtk_fields: missing space");
  const TriMesh& mesh = u.space->mesh();
  const int nv = static_cast<int>(mesh.vertices().size());
  if (p.p.size() != nv || vort.p.size() != nv || stream.p.size() != nv)
    throw InvalidParameter("write_vtk_fields: scalar fields must be P1 on the velocity mesh");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.precision(15);
  out << "# vtk DataFile Version 3.0\nbigrid fields\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << nv << " double\n";
  for (const Point& q : mesh.vertices()) out << q.x << ' ' << q.y << " 0\n";
  const auto& tris = mesh.triangles();
  out << "CELLS " << tris.size() << ' ' << 4 * tris.size() << '\n';
  for (const auto& t : tris) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << tris.size() << '\n';
  for (std::size_t k = 0; k < tris.size(); ++k) out << "5\n";
  out << "POINT_DATA " << nv << "\nVECTORS velocity double\n";
  const int n = mesh.n();
  const int lat = 2 * n + 1;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      const int d = (2 * j) * lat + 2 * i;
      out << u.ux[d] << ' ' << u.uy[d] << " 0\n";
    }
  auto scalars = [&](const char* name, const Vector& v) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (int k = 0; k < nv; ++k) out << v[k] << '\n';
  };
  scalars("pressure", p.p);
  scalars("vorticity", vort.p);
  scalars("stream_function", stream.p);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace {

void dump_vector(const Vector& v, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.precision(17);
  for (Eigen::Index k = 0; k < v.size(); ++k) out << v[k] << '\n';
}

void write_state(const FlowSolver& s, const OutputSpec& o, const std::string& tag) {
  const FlowState& st = s.state();
  if (o.write_vtk)
    write_vtk_fields(st.u, st.p, vorticity(st.u), stream_function(st.u), o.out_dir / ("fields_" + tag + ".vtk"));
  if (o.dump_raw) {
    dump_vector(st.u.ux, o.out_dir / ("ux_" + tag + ".txt"));
    dump_vector(st.u.uy, o.out_dir / ("uy_" + tag + ".txt"));
    dump_vector(st.p.p, o.out_dir / ("p_" + tag + ".txt"));
  }
}

int run_rd(const CliOptions& o) {
  const double a = o.rd_amplitude;
  RdSolver s(o.rd, o.coarse_n, o.fine_n,
             [a](double x, double y) { return a * std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y); });
  const std::filesystem::path path = o.output.out_dir / "rd_series.csv";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "step,time,l2,newton_iters,stable\n";
  bool stable = true;
  for (long k = 0; k < o.rd.step_count() && stable; ++k) {
    const RdStepReport r = o.rd_stabilized ? s.step_stabilized() : s.step_plain();
    out << r.step << ',' << csv_num(r.time) << ',' << csv_num(r.l2_fine) << ',' << r.newton_iters << ','
        << (r.stable ? 1 : 0) << '\n';
    stable = r.stable;
  }
  std::cout << "rd " << (o.rd_stabilized ? "stabilized" : "plain") << ": " << (stable ? "stable" : "unstable")
            << ", ||u_h|| = " << csv_num(std::sqrt(s.state().uh.dot(s.fine_mass() * s.state().uh))) << '\n';
  return 0;
}

} // namespace

int run_cli(const CliOptions& o) {
  std::filesystem::create_directories(o.output.out_dir);
  std::cout << "config: " << canonical_echo(o) << '\n';
  if (o.spec.kind == CaseSpec::Kind::rd) return run_rd(o);

  if (o.scan) {
    if (o.spec.kind != CaseSpec::Kind::cavity) throw InvalidParameter("--scan is defined for the cavity case");
    ScanRequest req;
    req.scheme = o.cfg.scheme;
    req.Re = o.spec.Re;
    req.taus = o.scan_taus;
    req.dts = o.scan_dts;
    req.coarse_n = o.coarse_n;
    req.fine_n = o.fine_n;
    req.horizon = o.scan_horizon;
    const auto cells = stability_scan(req);
    const std::string table = format_scan_table(cells);
    std::cout << to_string(o.cfg.scheme) << ", Re=" << o.spec.Re << ", horizon " << o.scan_horizon << "\n" << table;
    std::ofstream(o.output.out_dir / "scan.txt", std::ios::binary) << table;
    return 0;
  }

  FlowSolver solver(o.cfg, o.spec.problem(), o.coarse_n, o.fine_n);
  StepObserver obs = [&](const FlowSolver& s, StepReport& r) {
    if (o.spec.kind == CaseSpec::Kind::bercovier) {
      const ExactEvaluators ex = bercovier_exact(r.time);
      r.err_u = l2_error(s.state().u, ex.velocity);
      r.err_p = pressure_l2_error(s.state().p, ex.pressure);
    }
    if (o.output.write_vtk && r.step % o.output.vtk_every == 0) write_state(s, o.output, std::to_string(r.step));
  };
  const RunReport rep = run_transient(solver, obs);
  if (o.output.write_csv) write_csv_series(rep, o.output.out_dir / "series.csv");
  write_state(solver, o.output, "final");

  const PressureField stream = stream_function(rep.final_state.u);
  const Extrema psi = locate_extrema(*stream.space, stream.p);
  std::cout << "steps " << rep.steps.size() << ", t = " << rep.final_state.t << ", "
            << (rep.stable ? "stable" : "unstable") << ", wall " << rep.wall_total << " s\n";
  if (rep.switch_step) std::cout << "switched to reference after step " << *rep.switch_step << '\n';
  if (!rep.steps.empty()) {
    const auto& last = rep.steps.back();
    std::cout << "dudt_l2 " << csv_num(last.dudt_norm);
    if (last.err_u) std::cout << ", err_u " << csv_num(*last.err_u) << ", err_p " << csv_num(*last.err_p);
    std::cout << '\n';
  }
  std::cout << "psi min " << csv_num(psi.min.value) << " at (" << psi.min.where.x << ", " << psi.min.where.y << ")\n";
  return 0;
}

} // namespace bigrid
