// Acceptance checks. Each criterion prints one PASS/FAIL line; the exit code
// is nonzero when any selected criterion fails.

#include "bigrid/bench.hpp"
#include "bigrid/errors.hpp"
#include "bigrid/fem.hpp"
#include "bigrid/scalar_bigrid.hpp"
#include "bigrid/schemes.hpp"
#include "bigrid/transfer.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace bigrid;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failed sub-checks and a one-line summary.
class Checks {
public:
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      failed_.push_back(what);
    }
  }
  void note(const std::string& s) { notes_.push_back(s); }
  Outcome outcome() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < notes_.size(); ++i) os << (i ? "; " : "") << notes_[i];
    if (!failed_.empty()) {
      os << (notes_.empty() ? "" : "; ") << "failed:";
      for (const auto& f : failed_) os << ' ' << f << ';';
    }
    return {pass_, os.str()};
  }

private:
  bool pass_ = true;
  std::vector<std::string> notes_;
  std::vector<std::string> failed_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::shared_ptr<const FeSpace> space(int n, ElementKind k) {
  return std::make_shared<const FeSpace>(std::make_shared<const TriMesh>(build_uniform_mesh(n)), k);
}

Vector random_vector(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> g(-1.0, 1.0);
  Vector v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

double rel_diff(const Vector& a, const Vector& b) {
  const double s = std::max(b.cwiseAbs().maxCoeff(), 1e-300);
  return (a - b).cwiseAbs().maxCoeff() / s;
}

SchemeConfig flow_config(Scheme s, double re, double dt, double tau, double T) {
  SchemeConfig c;
  c.scheme = s;
  c.nu = 1.0 / re;
  c.dt = dt;
  c.tau = tau;
  c.T = T;
  return c;
}

// Worst per-step invariant values over every flow step observed in this
// process, and the operator counters of every finished run.
struct InvariantMonitor {
  double pressure_mean = 0.0;
  double boundary = 0.0;
  long steps = 0;
  long runs = 0;
  std::map<Scheme, std::vector<int>> factorizations; ///< default configurations only

  StepObserver observer() {
    return [this](const FlowSolver& s, StepReport&) {
      const Level& L = s.fine();
      pressure_mean = std::max(pressure_mean, std::abs(L.pressure_integrals.dot(s.state().p.p)));
      auto check = [&](const Vector& c, const BoundaryData& bc) {
        for (std::size_t i = 0; i < bc.dofs.size(); ++i)
          boundary = std::max(boundary, std::abs(c[bc.dofs[i]] - bc.values[i]));
      };
      check(s.state().u.ux, L.bc_x);
      check(s.state().u.uy, L.bc_y);
      ++steps;
    };
  }
  void record(const RunReport& r) {
    ++runs;
    if (!r.config.theta_s && !r.config.algo3_literal)
      factorizations[r.config.scheme].push_back(r.counters.fine_velocity_factorizations);
  }
};

InvariantMonitor monitor;

RunReport monitored_run(const CaseSpec& c, const SchemeConfig& cfg, int coarse_n, int fine_n) {
  RunReport r = run_case(c, cfg, coarse_n, fine_n, monitor.observer());
  monitor.record(r);
  return r;
}

// ---------------------------------------------------------------------------

Outcome zero_tau_equivalence() {
  Checks ck;
  const SchemeConfig a = flow_config(Scheme::bigrid1, 100, 0.01, 0.0, 0.1);
  const SchemeConfig b = flow_config(Scheme::semi_implicit, 100, 0.01, 0.0, 0.1);
  const FlowProblem p = CaseSpec::cavity(100).problem();
  FlowSolver s1(a, p, 8, 16), s2(b, p, 8, 16);
  const StepObserver obs = monitor.observer();
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    StepReport r1 = s1.step(), r2 = s2.step();
    obs(s1, r1);
    obs(s2, r2);
    worst = std::max({worst, rel_diff(s1.state().u.ux, s2.state().u.ux), rel_diff(s1.state().u.uy, s2.state().u.uy),
                      rel_diff(s1.state().p.p, s2.state().p.p)});
  }
  ck.note("max relative difference over 10 steps " + fmt("%.2e", worst));
  ck.require(worst <= 1e-10, "coefficients differ by more than 1e-10");
  return ck.outcome();
}

Outcome transfer_identities() {
  Checks ck;
  double rp = 0.0, iso = 0.0, orth = 0.0;
  for (int n : {8, 20}) {
    const TransferOps t(space(n, ElementKind::P2), space(2 * n, ElementKind::P2));
    const SparseMatrix mh = assemble_mass(t.fine_space());
    for (unsigned seed : {1u, 2u, 3u}) {
      const Vector uH = random_vector(t.coarse_space().dof_count(), seed);
      const Vector Pu = t.prolong(uH);
      rp = std::max(rp, rel_diff(t.restrict_l2(Pu), uH));
      const double nH = std::sqrt(uH.dot(t.coarse_mass() * uH)), nh = std::sqrt(Pu.dot(mh * Pu));
      iso = std::max(iso, std::abs(nh - nH) / nH);
      const Vector uh = random_vector(t.fine_space().dof_count(), seed + 10);
      const Vector z = uh - t.prolong(t.restrict_l2(uh));
      const Vector pz = t.prolongation().transpose() * (mh * z);
      const Vector pu = t.prolongation().transpose() * (mh * uh);
      orth = std::max(orth, pz.cwiseAbs().maxCoeff() / pu.cwiseAbs().maxCoeff());
    }
  }
  ck.note("restrict(prolong) " + fmt("%.1e", rp) + ", isometry " + fmt("%.1e", iso) + ", orthogonality " +
          fmt("%.1e", orth));
  ck.require(rp <= 1e-10, "restrict(prolong) != identity");
  ck.require(iso <= 1e-12, "prolongation not an L2 isometry");
  ck.require(orth <= 1e-10, "fluctuation not orthogonal to the coarse space");
  return ck.outcome();
}

Outcome assembly_oracles() {
  Checks ck;
  auto near = [&](double v, double want, double tol, const std::string& what) {
    ck.require(std::abs(v - want) <= tol, what + " = " + fmt("%.17g", v));
  };
  for (int n : {2, 4, 9})
    for (ElementKind k : {ElementKind::P1, ElementKind::P2}) {
      const auto s = space(n, k);
      near(assemble_mass(*s).sum(), 1.0, 1e-13, "mass sum");
    }
  for (ElementKind k : {ElementKind::P1, ElementKind::P2}) {
    const auto s = space(8, k);
    const Vector x = s->interpolate([](double x, double) { return x; });
    near(x.dot(assemble_stiffness(*s) * x), 1.0, 1e-12, "stiffness energy of x");
  }
  const auto v = space(8, ElementKind::P2);
  const auto v4 = space(4, ElementKind::P2);
  const auto p = space(8, ElementKind::P1);
  {
    const Vector x2 = v->interpolate([](double x, double) { return x * x; });
    near(x2.dot(assemble_stiffness(*v) * x2), 4.0 / 3.0, 1e-12, "stiffness energy of x^2");
  }
  auto field = [](const std::shared_ptr<const FeSpace>& s, auto fx, auto fy) {
    return VelocityField{s, s->interpolate(fx), s->interpolate(fy)};
  };
  auto zero = [](double, double) { return 0.0; };
  {
    const Vector x = v4->interpolate([](double x, double) { return x; });
    near((assemble_convection_matrix(*v4, field(v4, [](double, double) { return 1.0; }, zero)) * x).sum(), 1.0, 1e-12,
         "convection sum, w = (1, 0)");
    near((assemble_convection_matrix(*v4, field(v4, [](double, double y) { return y; }, zero)) * x).sum(), 0.5, 1e-12,
         "convection sum, w = (y, 0)");
    const VelocityField u = field(v, [](double x, double) { return x; }, zero);
    near(assemble_convection_vector(*v, u, u).first.sum(), 0.5, 1e-12, "convection vector sum, w = u = (x, 0)");
  }
  near(assemble_div_rhs(*p, field(v, [](double, double y) { return y; }, [](double x, double) { return x; }))
           .cwiseAbs()
           .maxCoeff(),
       0.0, 1e-13, "divergence of (y, x)");
  near(assemble_div_rhs(*p, field(v, [](double x, double) { return x; }, zero)).sum(), 1.0, 1e-12,
       "divergence sum of (x, 0)");
  near(assemble_div_rhs(*p, field(v, [](double x, double) { return x * x; }, zero)).sum(), 1.0, 1e-12,
       "divergence sum of (x^2, 0)");
  {
    auto [gx, gy] = assemble_grad_coupling(*v, *p);
    const Vector one = Vector::Ones(p->dof_count());
    near((gx * one).cwiseAbs().maxCoeff() + (gy * one).cwiseAbs().maxCoeff(), 0.0, 1e-13, "gradient of a constant");
    near((gx * p->interpolate([](double x, double) { return x; })).sum(), 1.0, 1e-12, "gradient sum of x");
    near((gx * p->interpolate([](double x, double y) { return (x - 0.5) * (y - 0.5); })).sum(), 0.0, 1e-12,
         "gradient sum of (x - 1/2)(y - 1/2)");
  }
  ck.note("mass, stiffness, convection, divergence and gradient oracles checked");
  return ck.outcome();
}

// Central differences of the exact solution.
std::array<double, 2> fd_forcing(double x, double y, double t, double nu, double h) {
  const auto c = bercovier_velocity(x, y, t);
  const auto xp = bercovier_velocity(x + h, y, t), xm = bercovier_velocity(x - h, y, t);
  const auto yp = bercovier_velocity(x, y + h, t), ym = bercovier_velocity(x, y - h, t);
  const auto tp = bercovier_velocity(x, y, t + h), tm = bercovier_velocity(x, y, t - h);
  std::array<double, 2> f{};
  for (int k = 0; k < 2; ++k) {
    const double lap = (xp[k] + xm[k] + yp[k] + ym[k] - 4 * c[k]) / (h * h);
    f[k] = (tp[k] - tm[k]) / (2 * h) + c[0] * (xp[k] - xm[k]) / (2 * h) + c[1] * (yp[k] - ym[k]) / (2 * h) - nu * lap;
  }
  f[0] += (bercovier_pressure(x + h, y) - bercovier_pressure(x - h, y)) / (2 * h);
  f[1] += (bercovier_pressure(x, y + h) - bercovier_pressure(x, y - h)) / (2 * h);
  return f;
}

Outcome temporal_order() {
  Checks ck;
  const double nu = 1e-3;
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> pos(0.02, 0.98), tt(0.0, 1.0);
  double fd = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double x = pos(rng), y = pos(rng), t = tt(rng);
    const auto f = bercovier_forcing(x, y, t, nu);
    const auto g = fd_forcing(x, y, t, nu, 1e-5);
    fd = std::max(fd, std::hypot(f[0] - g[0], f[1] - g[1]) / std::hypot(f[0], f[1]));
  }
  ck.note("forcing residual " + fmt("%.1e", fd));
  ck.require(fd <= 1e-6, "forcing does not match finite differences");

  const std::vector<double> dts{2e-2, 1e-2, 5e-3};
  for (Scheme s : {Scheme::reference, Scheme::bigrid1, Scheme::bigrid2, Scheme::bigrid3, Scheme::bigrid4}) {
    std::vector<double> err;
    for (double dt : dts) {
      const RunReport r = monitored_run(CaseSpec::bercovier(1000), flow_config(s, 1000, dt, 0.5, 1.0), 20, 40);
      err.push_back(r.stable && r.steps.back().err_u ? *r.steps.back().err_u : std::nan(""));
    }
    std::string line = std::string(to_string(s)) + " errors";
    for (double e : err) line += " " + fmt("%.3e", e);
    line += ", orders";
    for (std::size_t i = 0; i + 1 < err.size(); ++i) {
      const double q = std::log(err[i] / err[i + 1]) / std::log(dts[i] / dts[i + 1]);
      line += " " + fmt("%.2f", q);
      ck.require(q >= 0.7 && q <= 1.3, std::string(to_string(s)) + " order " + fmt("%.2f", q));
    }
    ck.note(line);
  }
  return ck.outcome();
}

struct ExpectedCell {
  Scheme scheme;
  double tau;
  double dt;
  bool stable;
};

Outcome stability_pattern(double re, const std::vector<ExpectedCell>& cells, double horizon) {
  Checks ck;
  const double t_scan = std::min(horizon, default_final_time(re));
  ck.note("horizon t = " + fmt("%g", t_scan));
  for (const auto& e : cells) {
    const ScanCell c = classify(e.scheme, re, e.tau, e.dt, 40, 80, horizon, monitor.observer());
    std::ostringstream os;
    os << to_string(e.scheme) << " tau=" << e.tau << " dt=" << e.dt << ": " << (c.stable ? "stable" : "unstable");
    if (!c.stable) os << " at t=" << fmt("%.3f", c.t_end);
    ck.note(os.str());
    ck.require(c.stable == e.stable, os.str() + " (expected " + (e.stable ? "stable" : "unstable") + ")");
  }
  return ck.outcome();
}

Outcome stability_re400(double horizon) {
  return stability_pattern(400,
                           {{Scheme::semi_implicit, 0.0, 0.05, false},
                            {Scheme::bigrid1, 0.5, 0.05, false},
                            {Scheme::bigrid1, 30, 0.05, true},
                            {Scheme::bigrid1, 30, 0.1, true}},
                           horizon);
}

Outcome stability_re1000(double horizon) {
  return stability_pattern(1000,
                           {{Scheme::semi_implicit, 0.0, 0.005, true},
                            {Scheme::bigrid1, 0.5, 0.005, true},
                            {Scheme::bigrid2, 0.5, 0.005, true},
                            {Scheme::bigrid3, 0.5, 0.005, true},
                            {Scheme::bigrid4, 0.5, 0.005, true},
                            {Scheme::semi_implicit, 0.0, 0.007, false},
                            {Scheme::bigrid2, 0.5, 0.007, true},
                            {Scheme::bigrid4, 0.5, 0.007, true},
                            {Scheme::bigrid1, 100, 0.05, true},
                            {Scheme::semi_implicit, 0.0, 0.05, false}},
                           horizon);
}

Outcome dt_gain(double horizon) {
  Checks ck;
  const std::vector<double> ladder{0.01, 0.02, 0.03, 0.05, 0.1, 0.2, 0.5};
  const double semi = max_stable_dt(Scheme::semi_implicit, 400, 0.0, ladder, 40, 80, horizon, monitor.observer());
  const double big = max_stable_dt(Scheme::bigrid1, 400, 30, ladder, 40, 80, horizon, monitor.observer());
  ck.note("max stable dt: semi-implicit " + fmt("%g", semi) + ", bigrid1 tau=30 " + fmt("%g", big));
  if (semi > 0.0) {
    const DtGain g = dt_gain_report(semi, big);
    ck.note("ratio " + fmt("%g", g.ratio));
    ck.require(g.ratio >= 5.0, "ratio below 5");
  } else {
    ck.require(false, "semi-implicit unstable on the whole ladder");
  }
  return ck.outcome();
}

double vector_l2(const SparseMatrix& m, const Vector& x, const Vector& y) {
  return std::sqrt(x.dot(m * x) + y.dot(m * y));
}

// When the reference Picard iteration first needs a single solve.
std::string single_iteration_summary(const RunReport& ref) {
  int fewest = std::numeric_limits<int>::max();
  for (const auto& st : ref.steps) {
    if (st.picard_iters == 1)
      return "reference needs one Picard solve from step " + std::to_string(st.step) + " (t=" + fmt("%g", st.time) +
             ", dudt " + fmt("%.3e", st.dudt_norm) + ")";
    fewest = std::min(fewest, st.picard_iters);
  }
  return "reference needs at least " + std::to_string(fewest) + " Picard solves per step; final dudt " +
         fmt("%.3e", ref.steps.empty() ? 0.0 : ref.steps.back().dudt_norm);
}

Outcome steady_state() {
  Checks ck;
  const RunReport ref = monitored_run(CaseSpec::cavity(400), flow_config(Scheme::reference, 400, 0.01, 0.5, 35), 40, 80);
  const RunReport big = monitored_run(CaseSpec::cavity(400), flow_config(Scheme::bigrid1, 400, 0.01, 0.5, 35), 40, 80);
  ck.require(ref.stable && big.stable, "a run blew up");
  if (!ref.stable || !big.stable) return ck.outcome();
  const VelocityField& ur = ref.final_state.u;
  const VelocityField& ub = big.final_state.u;
  const SparseMatrix m = assemble_mass(*ur.space);
  const double rel = vector_l2(m, ub.ux - ur.ux, ub.uy - ur.uy) / vector_l2(m, ur.ux, ur.uy);
  ck.note("relative L2 velocity difference " + fmt("%.3e", rel));
  ck.require(rel <= 1e-2, "velocity difference above 1e-2");

  const PressureField pr = stream_function(ur), pb = stream_function(ub);
  const Extremum er = locate_extrema(*pr.space, pr.p).min, eb = locate_extrema(*pb.space, pb.p).min;
  const double dv = std::abs(eb.value - er.value) / std::abs(er.value);
  const double h = 1.0 / ref.fine_n;
  const double dx = std::max(std::abs(eb.where.x - er.where.x), std::abs(eb.where.y - er.where.y));
  std::ostringstream os;
  os << "stream-function min reference " << fmt("%.6f", er.value) << " at (" << er.where.x << ", " << er.where.y
     << "), bigrid1 " << fmt("%.6f", eb.value) << " at (" << eb.where.x << ", " << eb.where.y << ")";
  ck.note(os.str());
  ck.require(er.value < 0.0, "stream-function minimum not negative");
  ck.require(dv <= 0.01, "minimum values differ by " + fmt("%.3e", dv));
  ck.require(dx <= h * (1 + 1e-9), "minimum locations differ by more than one cell");
  ck.note("final dudt reference " + fmt("%.2e", ref.steps.back().dudt_norm) + ", bigrid1 " +
          fmt("%.2e", big.steps.back().dudt_norm));
  ck.note(single_iteration_summary(ref));
  return ck.outcome();
}

Outcome cpu_gain() {
  Checks ck;
  const CaseSpec c = CaseSpec::cavity(400);
  const RunReport ref = monitored_run(c, flow_config(Scheme::reference, 400, 0.01, 0.5, 10), 40, 80);
  const RunReport big = monitored_run(c, flow_config(Scheme::bigrid1, 400, 0.01, 0.5, 10), 40, 80);
  ck.require(ref.stable && big.stable, "a run blew up");
  std::vector<RunReport> runs{big};
  ck.note(single_iteration_summary(ref));
  const std::optional<double> theta = calibrate_theta_s(ref);
  ck.note(theta ? "theta_s " + fmt("%.4e", *theta) : std::string("theta_s: no single-iteration reference step"));
  ck.require(theta.has_value(), "theta_s could not be calibrated");
  if (theta) {
    SchemeConfig h = flow_config(Scheme::bigrid1, 400, 0.01, 0.5, 10);
    h.theta_s = theta;
    runs.push_back(monitored_run(c, h, 40, 80));
  }
  const std::vector<CpuRow> rows = cpu_report(ref, runs);
  std::printf("%s", format_cpu_table(rows).c_str());
  ck.note("ratio " + fmt("%.3f", rows[0].ratio));
  ck.require(rows[0].ratio < 0.95, "bigrid1 ratio not below 0.95");
  if (rows.size() > 1) {
    ck.note("hybrid ratio " + fmt("%.3f", rows[1].ratio) +
            (runs[1].switch_step ? ", switched at step " + std::to_string(*runs[1].switch_step) : ", never switched"));
    ck.require(rows[1].ratio <= rows[0].ratio, "hybrid ratio above the plain ratio");
  }
  return ck.outcome();
}

Outcome invariants() {
  Checks ck;
  // Short runs of every scheme and configuration, on top of whatever the
  // other selected criteria have already run.
  for (Scheme s : {Scheme::reference, Scheme::incremental, Scheme::semi_implicit, Scheme::bigrid1, Scheme::bigrid2,
                   Scheme::bigrid3, Scheme::bigrid4})
    for (double re : {100.0, 1000.0}) monitored_run(CaseSpec::cavity(re), flow_config(s, re, 0.01, 0.5, 0.2), 20, 40);
  for (Scheme s : {Scheme::reference, Scheme::bigrid1, Scheme::bigrid4})
    monitored_run(CaseSpec::bercovier(100), flow_config(s, 100, 0.02, 0.5, 0.2), 10, 20);
  ck.note(std::to_string(monitor.steps) + " steps in " + std::to_string(monitor.runs) + " runs");
  ck.note("max |int p| " + fmt("%.1e", monitor.pressure_mean) + ", max boundary error " + fmt("%.1e", monitor.boundary));
  ck.require(monitor.pressure_mean <= 1e-12, "pressure mean above 1e-12");
  ck.require(monitor.boundary <= 1e-12, "boundary data violated");
  for (Scheme s : {Scheme::reference, Scheme::semi_implicit, Scheme::bigrid1, Scheme::bigrid3}) {
    const auto& f = monitor.factorizations[s];
    const int lo = f.empty() ? -1 : *std::min_element(f.begin(), f.end());
    const int hi = f.empty() ? -1 : *std::max_element(f.begin(), f.end());
    ck.note(std::string(to_string(s)) + " fine velocity factorizations " + std::to_string(lo) +
            (lo == hi ? "" : ".." + std::to_string(hi)));
    ck.require(lo == 1 && hi == 1, std::string(to_string(s)) + " factorization count != 1");
  }
  return ck.outcome();
}

// Fine step with f(u^k) explicit: tau = 0 is the plain semi-implicit scheme.
bool rd_bounded(double dt, double tau, double amplitude) {
  RdConfig c;
  c.dt = dt;
  c.tau = tau;
  c.T = 2.0;
  RdSolver s(c, 4, 8, [amplitude](double x, double y) {
    return amplitude * std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y);
  });
  for (long k = 0; k < c.step_count(); ++k)
    if (!s.step_stabilized().stable) return false;
  return true;
}

Outcome scalar_testbed() {
  Checks ck;
  auto l2 = [](const SparseMatrix& m, const Vector& v) { return std::sqrt(v.dot(m * v)); };
  for (bool stabilized : {false, true}) {
    RdConfig c;
    c.dt = 0.01;
    c.tau = stabilized ? 5.0 : 0.0;
    c.T = 0.5;
    c.f = RdConfig::Nonlinearity::zero;
    RdSolver s(c, 8, 16, [](double x, double y) { return x * (1 - x) * std::exp(y) * std::sin(std::numbers::pi * y); });
    double last = l2(s.fine_mass(), s.state().uh);
    bool ok = true;
    for (long k = 0; k < c.step_count(); ++k) {
      const RdStepReport r = stabilized ? rd_step_bigrid_stabilized(s) : rd_step_bigrid_plain(s);
      ok = ok && r.l2_fine <= last * (1 + 1e-12);
      last = r.l2_fine;
    }
    ck.require(ok, std::string(stabilized ? "stabilized" : "plain") + " scheme not dissipative");
  }
  double eq = 0.0;
  for (double v : {1.0, -1.0})
    for (bool stabilized : {false, true}) {
      RdConfig c;
      c.dt = 0.05;
      c.tau = 3.0;
      c.T = 1.0;
      c.boundary = RdConfig::Boundary::neumann;
      RdSolver s(c, 8, 16, [v](double, double) { return v; });
      for (long k = 0; k < c.step_count(); ++k) stabilized ? s.step_stabilized() : s.step_plain();
      eq = std::max({eq, (s.state().uh.array() - v).abs().maxCoeff(), (s.state().uH.array() - v).abs().maxCoeff()});
    }
  ck.note("equilibrium drift " + fmt("%.1e", eq));
  ck.require(eq <= 1e-12, "u = +-1 not preserved");

  const double amplitude = 10.0;
  const std::vector<double> ladder{0.005, 0.01, 0.02, 0.03, 0.05, 0.1};
  std::optional<double> critical;
  for (double dt : ladder)
    if (!rd_bounded(dt, 0.0, amplitude)) {
      critical = dt;
      break;
    }
  ck.require(critical.has_value(), "plain scheme bounded on the whole ladder");
  if (critical) {
    const bool stab = rd_bounded(*critical, 10.0, amplitude);
    ck.note("plain scheme exceeds the blowup threshold at dt=" + fmt("%g", *critical) + ", tau=10 " +
            (stab ? "bounded" : "unbounded"));
    ck.require(stab, "tau = 10 not bounded at the critical dt");
  }
  return ck.outcome();
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks for the bi-grid solvers"};
  std::vector<int> only;
  // Scans integrate to the default final time of each Reynolds number
  // unless a shorter horizon is given.
  double horizon = std::numeric_limits<double>::infinity();
  app.add_option("--only", only, "Criteria to run (default: all)")->delimiter(',')->check(CLI::Range(1, 11));
  app.add_option("--horizon", horizon, "Cap on the stability scan horizon")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"tau = 0 reduces bigrid1 to semi-implicit", zero_tau_equivalence},
      {"transfer identities", transfer_identities},
      {"assembly oracles", assembly_oracles},
      {"first-order temporal convergence", temporal_order},
      {"stability pattern at Re=400", [&] { return stability_re400(horizon); }},
      {"stability pattern at Re=1000", [&] { return stability_re1000(horizon); }},
      {"time-step gain at Re=400", [&] { return dt_gain(horizon); }},
      {"steady state at Re=400", steady_state},
      {"CPU gain at Re=400", cpu_gain},
      {"per-step invariants and factorization counts", invariants},
      {"scalar bi-grid testbed", scalar_testbed},
  };

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("criterion %2d %s  %s (%.1f s): %s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                seconds_since(t0), o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
