#include "bigrid/bench.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace bigrid {

namespace {

double g0(double s) { return s * s * (1 - s) * (1 - s); }
double g1(double s) { return 2 * s - 6 * s * s + 4 * s * s * s; }
double g2(double s) { return 2 - 12 * s + 12 * s * s; }
double g3(double s) { return -12 + 24 * s; }

// Gauss-Legendre nodes and weights on [0, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = 0.5 * (1 - z);
    w[i] = 1.0 / ((1 - z * z) * dp * dp);
  }
  return {x, w};
}

// Collapsed Gauss rule on the reference triangle, exact to degree 2n-2.
const QuadratureRule& accurate_rule() {
  static const QuadratureRule rule = [] {
    QuadratureRule r;
    const int n = 8;
    auto [x, w] = gauss_legendre(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double a = x[i];
        const double b = x[j] * (1 - a);
        r.points.push_back({1 - a - b, a, b});
        r.weights.push_back(w[i] * w[j] * (1 - a));
      }
    r.degree = 2 * n - 2;
    return r;
  }();
  return rule;
}

Point map_point(const TriMesh& mesh, int t, const std::array<double, 3>& l) {
  const auto& tri = mesh.triangles()[t];
  const Point& a = mesh.vertices()[tri[0]];
  const Point& b = mesh.vertices()[tri[1]];
  const Point& c = mesh.vertices()[tri[2]];
  return {l[0] * a.x + l[1] * b.x + l[2] * c.x, l[0] * a.y + l[1] * b.y + l[2] * c.y};
}

// Integrates g(x, y, values of the fields at the point) over the mesh.
template <class F>
void for_each_point(const FeSpace& space, const QuadratureRule& rule, F&& f) {
  const int nl = space.dofs_per_cell();
  std::vector<double> phi(static_cast<std::size_t>(nl) * rule.points.size());
  for (std::size_t q = 0; q < rule.points.size(); ++q)
    space.shape_values(rule.points[q], std::span<double>(phi.data() + q * nl, nl));
  for (int t = 0; t < space.cell_count(); ++t) {
    const double scale = 2.0 * space.mesh().triangle_area(t);
    auto dofs = space.cell_dofs(t);
    for (std::size_t q = 0; q < rule.points.size(); ++q)
      f(map_point(space.mesh(), t, rule.points[q]), rule.weights[q] * scale, dofs,
        std::span<const double>(phi.data() + q * nl, nl));
  }
}

double interp(const Vector& c, std::span<const int> dofs, std::span<const double> phi) {
  double s = 0.0;
  for (std::size_t a = 0; a < dofs.size(); ++a) s += c[dofs[a]] * phi[a];
  return s;
}

// (curl u, chi_i) for the P1 space on the velocity mesh.
Vector curl_load(const VelocityField& u, const FeSpace& p1) {
  const FeSpace& v = *u.space;
  const auto& rule = degree4_rule();
  Vector b = Vector::Zero(p1.dof_count());
  std::array<std::array<double, 2>, 6> grad{};
  std::array<double, 3> chi{};
  for (int t = 0; t < v.cell_count(); ++t) {
    const CellGeometry g = cell_geometry(v.mesh(), t);
    auto vd = v.cell_dofs(t);
    auto pd = p1.cell_dofs(t);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      v.shape_gradients(rule.points[q], g, std::span<std::array<double, 2>>(grad.data(), static_cast<std::size_t>(v.dofs_per_cell())));
      p1.shape_values(rule.points[q], chi);
      double curl = 0.0;
      for (int a = 0; a < v.dofs_per_cell(); ++a) curl += u.uy[vd[a]] * grad[a][0] - u.ux[vd[a]] * grad[a][1];
      const double w = rule.weights[q] * 2.0 * g.area * curl;
      for (int i = 0; i < 3; ++i) b[pd[i]] += w * chi[i];
    }
  }
  return b;
}

} // namespace

const char* to_string(CaseSpec::Kind k) {
  switch (k) {
  case CaseSpec::Kind::cavity: return "cavity";
  case CaseSpec::Kind::bercovier: return "bercovier";
  case CaseSpec::Kind::rd: return "rd";
  }
  return "unknown";
}

CaseSpec::Kind parse_case_kind(const std::string& name) {
  if (name == "cavity") return CaseSpec::Kind::cavity;
  if (name == "bercovier") return CaseSpec::Kind::bercovier;
  if (name == "rd") return CaseSpec::Kind::rd;
  throw InvalidParameter("unknown case '" + name + "'");
}

double default_final_time(double re) {
  static const std::array<std::pair<double, double>, 7> table{
      {{100, 17}, {400, 35}, {1000, 56}, {2000, 70}, {3200, 130}, {5000, 148}, {7500, 195}}};
  for (const auto& [r, t] : table)
    if (re <= r) return t;
  return table.back().second;
}

std::array<double, 2> bercovier_velocity(double x, double y, double t) {
  const double e = std::exp(std::sin(t));
  return {-g0(x) * g1(y) * e, g1(x) * g0(y) * e};
}

double bercovier_pressure(double x, double y) { return (x - 0.5) * (y - 0.5); }

std::array<double, 2> bercovier_forcing(double x, double y, double t, double nu) {
  const double e = std::exp(std::sin(t));
  const double u1 = -g0(x) * g1(y) * e;
  const double u2 = g1(x) * g0(y) * e;
  const double u1x = -g1(x) * g1(y) * e, u1y = -g0(x) * g2(y) * e;
  const double u2x = g2(x) * g0(y) * e, u2y = g1(x) * g1(y) * e;
  const double lap1 = -(g2(x) * g1(y) + g0(x) * g3(y)) * e;
  const double lap2 = (g3(x) * g0(y) + g1(x) * g2(y)) * e;
  const double ct = std::cos(t);
  return {ct * u1 + u1 * u1x + u2 * u1y - nu * lap1 + (y - 0.5),
          ct * u2 + u1 * u2x + u2 * u2y - nu * lap2 + (x - 0.5)};
}

ExactEvaluators bercovier_exact(double t) {
  return {[t](double x, double y) { return bercovier_velocity(x, y, t); },
          [](double x, double y) { return bercovier_pressure(x, y); }};
}

FlowProblem CaseSpec::problem() const {
  FlowProblem p;
  switch (kind) {
  case Kind::cavity: p.boundary = FlowProblem::Boundary::lid; break;
  case Kind::bercovier: {
    const double nu = 1.0 / Re;
    p.boundary = FlowProblem::Boundary::no_slip;
    p.forcing = [nu](double x, double y, double t) { return bercovier_forcing(x, y, t, nu); };
    p.initial_velocity = [](double x, double y) { return bercovier_velocity(x, y, 0.0); };
    p.initial_pressure = bercovier_pressure;
    break;
  }
  case Kind::rd: throw InvalidParameter("CaseSpec::problem: the rd case is not a flow problem");
  }
  return p;
}

double l2_error(const FeSpace& space, const Vector& c, const std::function<double(double, double)>& exact) {
  if (c.size() != space.dof_count()) throw InvalidParameter("l2_error: length mismatch");
  double s = 0.0;
  for_each_point(space, accurate_rule(), [&](Point x, double w, std::span<const int> dofs, std::span<const double> phi) {
    const double e = interp(c, dofs, phi) - exact(x.x, x.y);
    s += w * e * e;
  });
  return std::sqrt(s);
}

double l2_error(const VelocityField& u, const std::function<std::array<double, 2>(double, double)>& exact) {
  if (!u.space) throw InvalidParameter("l2_error: field without space");
  double s = 0.0;
  for_each_point(*u.space, accurate_rule(), [&](Point x, double w, std::span<const int> dofs, std::span<const double> phi) {
    const auto ex = exact(x.x, x.y);
    const double e0 = interp(u.ux, dofs, phi) - ex[0];
    const double e1 = interp(u.uy, dofs, phi) - ex[1];
    s += w * (e0 * e0 + e1 * e1);
  });
  return std::sqrt(s);
}

double pressure_l2_error(const PressureField& p, const std::function<double(double, double)>& exact) {
  if (!p.space) throw InvalidParameter("pressure_l2_error: field without space");
  double s1 = 0.0, s2 = 0.0;
  for_each_point(*p.space, accurate_rule(), [&](Point x, double w, std::span<const int> dofs, std::span<const double> phi) {
    const double e = interp(p.p, dofs, phi) - exact(x.x, x.y);
    s1 += w * e;
    s2 += w * e * e;
  });
  return std::sqrt(std::max(0.0, s2 - s1 * s1));
}

PressureField vorticity(const VelocityField& u) {
  if (!u.space || u.space->kind() != ElementKind::P2) throw InvalidParameter("vorticity: velocity must be P2");
  auto p1 = std::make_shared<const FeSpace>(u.space->mesh_ptr(), ElementKind::P1);
  const Factorization m(assemble_mass(*p1), SolverMethod::direct_ldlt, 1e-13);
  return {p1, m.solve(curl_load(u, *p1))};
}

PressureField stream_function(const VelocityField& u) {
  if (!u.space || u.space->kind() != ElementKind::P2) throw InvalidParameter("stream_function: velocity must be P2");
  auto p1 = std::make_shared<const FeSpace>(u.space->mesh_ptr(), ElementKind::P1);
  const DirichletSystem sys(assemble_stiffness(*p1), p1->boundary_dofs());
  const Factorization k(sys.matrix(), SolverMethod::direct_ldlt, 1e-13);
  return {p1, k.solve(sys.rhs(curl_load(u, *p1), zero_boundary_data(*p1)))};
}

Extrema locate_extrema(const FeSpace& space, const Vector& values) {
  if (values.size() != space.dof_count() || values.size() == 0) throw InvalidParameter("locate_extrema: length mismatch");
  Eigen::Index lo = 0, hi = 0;
  values.minCoeff(&lo);
  values.maxCoeff(&hi);
  return {{values[lo], space.dof_coords()[lo]}, {values[hi], space.dof_coords()[hi]}};
}

RunReport run_case(const CaseSpec& c, const SchemeConfig& cfg, int coarse_n, int fine_n, const StepObserver& observer) {
  FlowSolver solver(cfg, c.problem(), coarse_n, fine_n);
  const bool errors = c.kind == CaseSpec::Kind::bercovier;
  return run_transient(solver, [&](const FlowSolver& s, StepReport& r) {
    if (errors) {
      const ExactEvaluators ex = bercovier_exact(r.time);
      r.err_u = l2_error(s.state().u, ex.velocity);
      r.err_p = pressure_l2_error(s.state().p, ex.pressure);
    }
    if (observer) observer(s, r);
  });
}

ScanCell classify(Scheme scheme, double re, double tau, double dt, int coarse_n, int fine_n, double horizon,
                  const StepObserver& observer) {
  SchemeConfig cfg;
  cfg.scheme = scheme;
  cfg.nu = 1.0 / re;
  cfg.dt = dt;
  cfg.tau = tau;
  cfg.T = std::min(horizon, default_final_time(re));
  const RunReport rep = run_case(CaseSpec::cavity(re), cfg, coarse_n, fine_n, observer);
  ScanCell cell;
  cell.scheme = scheme;
  cell.tau = tau;
  cell.dt = dt;
  cell.stable = rep.stable;
  cell.steps = static_cast<long>(rep.steps.size());
  cell.t_end = rep.steps.empty() ? 0.0 : rep.steps.back().time;
  return cell;
}

std::vector<ScanCell> stability_scan(const ScanRequest& req) {
  std::vector<ScanCell> out;
  for (double tau : req.taus)
    for (double dt : req.dts) out.push_back(classify(req.scheme, req.Re, tau, dt, req.coarse_n, req.fine_n, req.horizon));
  return out;
}

std::string format_scan_table(const std::vector<ScanCell>& cells) {
  std::vector<double> taus, dts;
  for (const auto& c : cells) {
    if (std::find(taus.begin(), taus.end(), c.tau) == taus.end()) taus.push_back(c.tau);
    if (std::find(dts.begin(), dts.end(), c.dt) == dts.end()) dts.push_back(c.dt);
  }
  std::ostringstream os;
  os << std::setw(10) << "tau \\ dt";
  for (double dt : dts) os << std::setw(10) << dt;
  os << '\n';
  for (double tau : taus) {
    os << std::setw(10) << tau;
    for (double dt : dts) {
      auto it = std::find_if(cells.begin(), cells.end(), [&](const ScanCell& c) { return c.tau == tau && c.dt == dt; });
      os << std::setw(10) << (it == cells.end() ? "-" : (it->stable ? "yes" : "no"));
    }
    os << '\n';
  }
  return os.str();
}

double max_stable_dt(Scheme scheme, double re, double tau, const std::vector<double>& ladder, int coarse_n, int fine_n,
                     double horizon, const StepObserver& observer) {
  double best = 0.0;
  for (double dt : ladder) {
    if (!classify(scheme, re, tau, dt, coarse_n, fine_n, horizon, observer).stable) break;
    best = dt;
  }
  return best;
}

DtGain dt_gain_report(double max_dt_baseline, double max_dt_bigrid) {
  if (!(max_dt_baseline > 0.0)) throw InvalidParameter("dt_gain_report: baseline has no stable time step");
  return {max_dt_baseline, max_dt_bigrid, max_dt_bigrid / max_dt_baseline};
}

std::vector<CpuRow> cpu_report(const RunReport& reference, const std::vector<RunReport>& bigrid) {
  if (bigrid.empty()) throw InvalidComparison("cpu_report: no bi-grid run given");
  std::vector<CpuRow> rows;
  for (const auto& b : bigrid) {
    const SchemeConfig& a = reference.config;
    const SchemeConfig& c = b.config;
    if (a.nu != c.nu || a.dt != c.dt || a.T != c.T || reference.coarse_n != b.coarse_n || reference.fine_n != b.fine_n ||
        reference.steps.size() != b.steps.size())
      throw InvalidComparison("cpu_report: runs differ in viscosity, time step, horizon or meshes");
    CpuRow r;
    r.label = to_string(c.scheme);
    r.hybrid = c.theta_s.has_value();
    if (r.hybrid) r.label += " + theta_s";
    r.t_1g = reference.wall_total;
    r.t_2g = b.wall_total;
    r.ratio = r.t_2g / r.t_1g;
    r.phases = b.phase_totals;
    rows.push_back(r);
  }
  return rows;
}

std::string format_cpu_table(const std::vector<CpuRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(22) << "scheme" << std::right << std::setw(12) << "t_1G" << std::setw(12) << "t_2G"
     << std::setw(10) << "ratio" << std::setw(10) << "coarse" << std::setw(10) << "fine" << std::setw(10) << "pressure"
     << std::setw(10) << "transfer" << '\n';
  os << std::fixed;
  for (const auto& r : rows) {
    os << std::left << std::setw(22) << r.label << std::right << std::setprecision(3) << std::setw(12) << r.t_1g
       << std::setw(12) << r.t_2g << std::setprecision(4) << std::setw(10) << r.ratio << std::setprecision(3)
       << std::setw(10) << r.phases.coarse << std::setw(10) << r.phases.fine << std::setw(10) << r.phases.pressure
       << std::setw(10) << r.phases.transfer << '\n';
  }
  return os.str();
}

std::optional<double> calibrate_theta_s(const RunReport& reference) {
  for (const auto& s : reference.steps)
    if (s.scheme_used == Scheme::reference && s.picard_iters == 1) return s.dudt_norm;
  return std::nullopt;
}

} // namespace bigrid
