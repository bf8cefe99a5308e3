#include "bigrid/schemes.hpp"

#include "bigrid/errors.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace bigrid {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::pair<BoundaryData, BoundaryData> boundary_for(const FeSpace& v, FlowProblem::Boundary b) {
  if (b == FlowProblem::Boundary::lid) return cavity_lid_data(v);
  return {zero_boundary_data(v), zero_boundary_data(v)};
}

// a*x + b*y on a shared pattern, value by value so the sparsity is kept.
SparseMatrix combine(double a, const SparseMatrix& x, double b, const SparseMatrix& y) {
  SparseMatrix out = x;
  const double* yv = y.valuePtr();
  double* ov = out.valuePtr();
  for (Eigen::Index k = 0; k < out.nonZeros(); ++k) ov[k] = a * ov[k] + b * yv[k];
  return out;
}

double vector_norm(const SparseMatrix& mass, const Vector& x, const Vector& y) {
  return std::sqrt(x.dot(mass * x) + y.dot(mass * y));
}

double max_abs(const Vector& v) {
  if (!v.allFinite()) return std::numeric_limits<double>::infinity();
  return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

} // namespace

const char* to_string(Scheme s) {
  switch (s) {
  case Scheme::reference: return "reference";
  case Scheme::incremental: return "incremental";
  case Scheme::semi_implicit: return "semi-implicit";
  case Scheme::bigrid1: return "bigrid1";
  case Scheme::bigrid2: return "bigrid2";
  case Scheme::bigrid3: return "bigrid3";
  case Scheme::bigrid4: return "bigrid4";
  }
  return "unknown";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "reference") return Scheme::reference;
  if (name == "incremental") return Scheme::incremental;
  if (name == "semi-implicit" || name == "semi_implicit") return Scheme::semi_implicit;
  if (name == "bigrid1") return Scheme::bigrid1;
  if (name == "bigrid2") return Scheme::bigrid2;
  if (name == "bigrid3") return Scheme::bigrid3;
  if (name == "bigrid4") return Scheme::bigrid4;
  throw InvalidParameter("unknown scheme '" + name + "'");
}

bool is_bigrid(Scheme s) noexcept {
  return s == Scheme::bigrid1 || s == Scheme::bigrid2 || s == Scheme::bigrid3 || s == Scheme::bigrid4;
}

void SchemeConfig::validate() const {
  auto bad = [](const std::string& m) { throw InvalidParameter("SchemeConfig: " + m); };
  if (!(dt > 0.0) || !std::isfinite(dt)) bad("dt must be positive");
  if (!(nu > 0.0) || !std::isfinite(nu)) bad("nu must be positive");
  if (!(tau >= 0.0) || !std::isfinite(tau)) bad("tau must be nonnegative");
  if (!(alpha > 0.0)) bad("alpha must be positive");
  if (!(T >= dt * (1.0 - 1e-12))) bad("T must be at least dt");
  if (theta_s && !(*theta_s >= 0.0)) bad("theta_s must be nonnegative");
  if (!(picard_tol > 0.0)) bad("picard_tol must be positive");
  if (picard_max < 1) bad("picard_max must be at least 1");
  if (!(blowup_threshold > 0.0)) bad("blowup_threshold must be positive");
}

long SchemeConfig::step_count() const { return std::lround(T / dt); }

Level::Level(int n, FlowProblem::Boundary boundary)
    : mesh(std::make_shared<const TriMesh>(build_uniform_mesh(n))),
      velocity(std::make_shared<const FeSpace>(mesh, ElementKind::P2)),
      pressure(std::make_shared<const FeSpace>(mesh, ElementKind::P1)),
      mass(assemble_mass(*velocity)),
      stiffness(assemble_stiffness(*velocity)),
      pressure_integrals(dof_integrals(*pressure)),
      mass_system(mass, velocity->boundary_dofs()),
      mass_factor(mass_system.matrix(), SolverMethod::direct_ldlt, 1e-13),
      pressure_solver(assemble_stiffness(*pressure), pressure_integrals) {
  std::tie(grad_x, grad_y) = assemble_grad_coupling(*velocity, *pressure);
  std::tie(div_x, div_y) = assemble_div_coupling(*pressure, *velocity);
  std::tie(bc_x, bc_y) = boundary_for(*velocity, boundary);
}

double dudt_norm(const SparseMatrix& mass, const VelocityField& u_new, const VelocityField& u_old, double dt) {
  if (u_new.ux.size() != u_old.ux.size() || u_new.ux.size() != mass.rows())
    throw InvalidParameter("dudt_norm: fields live on different spaces");
  return vector_norm(mass, u_new.ux - u_old.ux, u_new.uy - u_old.uy) / dt;
}

double dudt_norm(const VelocityField& u_new, const VelocityField& u_old, double dt) {
  if (!u_new.space || !u_old.space || !u_new.space->compatible(*u_old.space))
    throw InvalidParameter("dudt_norm: fields live on different spaces");
  return dudt_norm(assemble_mass(*u_new.space), u_new, u_old, dt);
}

// Lazily built operators. Picard work buffers keep the space pattern so
// the elimination is refreshed in place instead of rebuilt.
namespace {

struct Work {
  SparseMatrix conv;
  SparseMatrix a;
  DirichletSystem sys;
};

struct Base {
  const Level* level;
  double c;
  SparseMatrix m;
};

struct Constant {
  const Level* level;
  double c;
  DirichletSystem sys;
  Factorization f;
};

} // namespace

struct FlowSolver::Cache {
  std::unique_ptr<Work> fine_work, coarse_work;
  std::vector<std::unique_ptr<Base>> bases;
  std::vector<std::unique_ptr<Constant>> constants;

  // c M + nu K on the level pattern.
  const SparseMatrix& base(const Level& L, double c, double nu) {
    for (const auto& b : bases)
      if (b->level == &L && b->c == c) return b->m;
    bases.push_back(std::make_unique<Base>(Base{&L, c, combine(c, L.mass, nu, L.stiffness)}));
    return bases.back()->m;
  }
  Work& work(const Level& L, bool is_fine) {
    auto& w = is_fine ? fine_work : coarse_work;
    if (!w) {
      const SparseMatrix& pat = L.velocity->pattern();
      w = std::make_unique<Work>(Work{pat, pat, DirichletSystem(pat, L.velocity->boundary_dofs())});
    }
    return *w;
  }
  // Factored c M + nu K with Dirichlet elimination, built once per level and c.
  Constant& constant(const Level& L, double c, double nu, int& factorizations) {
    for (const auto& k : constants)
      if (k->level == &L && k->c == c) return *k;
    DirichletSystem sys(base(L, c, nu), L.velocity->boundary_dofs());
    Factorization f(sys.matrix(), SolverMethod::direct_ldlt, 1e-12);
    constants.push_back(std::make_unique<Constant>(Constant{&L, c, std::move(sys), std::move(f)}));
    ++factorizations;
    return *constants.back();
  }
};

FlowSolver::FlowSolver(const SchemeConfig& cfg, FlowProblem problem, int coarse_n, int fine_n)
    : cfg_(cfg), problem_(std::move(problem)), cache_(std::make_unique<Cache>()) {
  cfg_.validate();
  if (fine_n != 2 * coarse_n) throw InvalidParameter("FlowSolver: fine_n must equal 2 * coarse_n");
  fine_ = std::make_unique<Level>(fine_n, problem_.boundary);
  coarse_ = std::make_unique<Level>(coarse_n, problem_.boundary);
  transfer_ = std::make_unique<TransferOps>(coarse_->velocity, fine_->velocity);
  counters_.fine_mass_factorizations = 1;
  counters_.fine_pressure_factorizations = 1;
  counters_.coarse_factorizations = 2;

  auto init_velocity = [&](const Level& L) {
    VelocityField u = VelocityField::zero(L.velocity);
    if (problem_.initial_velocity) {
      u.ux = L.velocity->interpolate([&](double x, double y) { return problem_.initial_velocity(x, y)[0]; });
      u.uy = L.velocity->interpolate([&](double x, double y) { return problem_.initial_velocity(x, y)[1]; });
    }
    impose(u.ux, L.bc_x);
    impose(u.uy, L.bc_y);
    return u;
  };
  auto init_pressure = [&](const Level& L) {
    PressureField p{L.pressure, Vector::Zero(L.pressure->dof_count())};
    if (problem_.initial_pressure) {
      p.p = L.pressure->interpolate(problem_.initial_pressure);
      zero_mean_inplace(p.p, L.pressure_integrals);
    }
    return p;
  };
  state_.u = init_velocity(*fine_);
  state_.p = init_pressure(*fine_);
  state_.uH = {coarse_->velocity, transfer_->restrict_l2(state_.u.ux, coarse_->bc_x),
               transfer_->restrict_l2(state_.u.uy, coarse_->bc_y)};
  state_.pH = init_pressure(*coarse_);
}

FlowSolver::~FlowSolver() = default;

void FlowSolver::set_state(FlowState s) {
  if (!s.u.space || !s.u.space->compatible(*fine_->velocity))
    throw InvalidParameter("set_state: velocity is not on the fine space");
  state_ = std::move(s);
  last_star_ = {};
  last_coarse_star_ = {};
}

double FlowSolver::max_coefficient() const {
  double m = std::max(max_abs(state_.u.ux), max_abs(state_.u.uy));
  if (is_bigrid(cfg_.scheme)) m = std::max({m, max_abs(state_.uH.ux), max_abs(state_.uH.uy)});
  if (!state_.p.p.allFinite()) m = std::numeric_limits<double>::infinity();
  return m;
}

std::pair<Vector, Vector> FlowSolver::forcing_load(const Level& level, double t) const {
  if (!problem_.forcing) {
    const int n = level.velocity->dof_count();
    return {Vector::Zero(n), Vector::Zero(n)};
  }
  return assemble_load(*level.velocity, [&](double x, double y) { return problem_.forcing(x, y, t); });
}

std::pair<Vector, Vector> FlowSolver::stabilization_rhs(const VelocityField& dH, bool via_cross_mass) const {
  if (!dH.space || !dH.space->compatible(*coarse_->velocity))
    throw InvalidParameter("stabilization_rhs: increment is not on the coarse space");
  const TransferOps& tr = *transfer_;
  if (via_cross_mass) {
    const SparseMatrix& c = tr.cross_mass();
    return {cfg_.tau * (c.transpose() * dH.ux), cfg_.tau * (c.transpose() * dH.uy)};
  }
  return {cfg_.tau * (fine_->mass * tr.prolong(dH.ux)), cfg_.tau * (fine_->mass * tr.prolong(dH.uy))};
}

StepReport FlowSolver::step() {
  switch (cfg_.scheme) {
  case Scheme::reference: return step_reference();
  case Scheme::incremental: return step_incremental();
  case Scheme::semi_implicit: return step_semi_implicit();
  default: return step_bigrid();
  }
}


namespace {

struct PicardResult {
  VelocityField u;
  int iters = 0;
  bool converged = false;
  long fallbacks = 0;
};

// Solves (base + N(u^m)) u^{m+1} = b with Dirichlet data until the L2
// increment is below tol * max(1, ||u^{m+1}||).
PicardResult picard(const Level& L, const SparseMatrix& base, const Vector& bx, const Vector& by,
                    const VelocityField& start, const SchemeConfig& cfg, Work& w) {
  PicardResult r;
  r.u = start;
  for (int m = 0; m < cfg.picard_max; ++m) {
    assemble_convection_matrix_into(*L.velocity, r.u, w.conv);
    const double* bv = base.valuePtr();
    const double* cv = w.conv.valuePtr();
    double* av = w.a.valuePtr();
    for (Eigen::Index k = 0; k < w.a.nonZeros(); ++k) av[k] = bv[k] + cv[k];
    w.sys.update(w.a);
    Factorization f(w.sys.matrix(), SolverMethod::bicgstab_jacobi, 1e-12);
    Vector ux = f.solve(w.sys.rhs(bx, L.bc_x), r.u.ux);
    Vector uy = f.solve(w.sys.rhs(by, L.bc_y), r.u.uy);
    r.fallbacks += f.fallback_count();
    const double inc = vector_norm(L.mass, ux - r.u.ux, uy - r.u.uy);
    const double nrm = vector_norm(L.mass, ux, uy);
    r.u.ux = std::move(ux);
    r.u.uy = std::move(uy);
    r.iters = m + 1;
    if (inc <= cfg.picard_tol * std::max(1.0, nrm)) {
      r.converged = true;
      break;
    }
  }
  return r;
}

// One linear solve of (base + N(w)) u = b, warm-started at `guess`.
VelocityField linearized_solve(const Level& L, const SparseMatrix& base, const VelocityField& wind, const Vector& bx,
                               const Vector& by, const VelocityField& guess, Work& w, long& fallbacks) {
  assemble_convection_matrix_into(*L.velocity, wind, w.conv);
  const double* bv = base.valuePtr();
  const double* cv = w.conv.valuePtr();
  double* av = w.a.valuePtr();
  for (Eigen::Index k = 0; k < w.a.nonZeros(); ++k) av[k] = bv[k] + cv[k];
  w.sys.update(w.a);
  Factorization f(w.sys.matrix(), SolverMethod::bicgstab_jacobi, 1e-12);
  VelocityField u{L.velocity, f.solve(w.sys.rhs(bx, L.bc_x), guess.ux), f.solve(w.sys.rhs(by, L.bc_y), guess.uy)};
  fallbacks += f.fallback_count();
  return u;
}

struct Projection {
  VelocityField u;
  Vector phi; ///< pressure, or pressure increment, solved for
  double defect = 0.0;
};

// alpha (grad phi, grad chi) = -(1/dt)(div u*, chi), then the constrained
// mass correction M u = M u* - alpha dt G phi.
Projection project(const Level& L, const VelocityField& ustar, double dt, double alpha) {
  Projection out;
  const Vector d = L.div_x * ustar.ux + L.div_y * ustar.uy;
  NeumannSolution sol = L.pressure_solver.solve((-1.0 / (alpha * dt)) * d);
  out.defect = sol.compatibility_defect;
  out.phi = std::move(sol.p);
  const Vector gx = L.grad_x * out.phi;
  const Vector gy = L.grad_y * out.phi;
  out.u.space = ustar.space;
  out.u.ux = L.mass_factor.solve(L.mass_system.rhs(L.mass * ustar.ux - (alpha * dt) * gx, L.bc_x));
  out.u.uy = L.mass_factor.solve(L.mass_system.rhs(L.mass * ustar.uy - (alpha * dt) * gy, L.bc_y));
  return out;
}

} // namespace

StepReport FlowSolver::finish(StepReport r, const VelocityField& u_old, double wall) {
  r.step = state_.k;
  r.time = state_.t;
  r.wall_seconds = wall;
  r.dudt_norm = dudt_norm(fine_->mass, state_.u, u_old, cfg_.dt);
  const double m = max_coefficient();
  r.stable = std::isfinite(m) && m <= cfg_.blowup_threshold && std::isfinite(r.dudt_norm);
  return r;
}

StepReport FlowSolver::step_reference() {
  const auto t0 = Clock::now();
  StepReport r;
  r.scheme_used = Scheme::reference;
  const double dt = cfg_.dt;
  const VelocityField u_old = state_.u;
  const double t1 = state_.t + dt;

  auto tf = Clock::now();
  auto [fx, fy] = forcing_load(*fine_, t1);
  const Vector bx = (1.0 / dt) * (fine_->mass * u_old.ux) + fx;
  const Vector by = (1.0 / dt) * (fine_->mass * u_old.uy) + fy;
  const SparseMatrix& base = cache_->base(*fine_, 1.0 / dt, cfg_.nu);
  PicardResult pr = picard(*fine_, base, bx, by, last_star_.space ? last_star_ : u_old, cfg_, cache_->work(*fine_, true));
  counters_.fine_operator_rebuilds += pr.iters;
  counters_.krylov_fallbacks += pr.fallbacks;
  r.picard_iters = pr.iters;
  r.picard_converged = pr.converged;
  r.phases.fine = seconds_since(tf);

  auto tp = Clock::now();
  last_star_ = pr.u;
  Projection pj = project(*fine_, pr.u, dt, 1.0);
  r.phases.pressure = seconds_since(tp);
  r.compatibility_defect = pj.defect;

  state_.u = std::move(pj.u);
  state_.p.p = std::move(pj.phi);
  state_.t = t1;
  ++state_.k;
  return finish(r, u_old, seconds_since(t0));
}

StepReport FlowSolver::step_incremental() {
  const auto t0 = Clock::now();
  StepReport r;
  r.scheme_used = Scheme::incremental;
  const double dt = cfg_.dt;
  const VelocityField u_old = state_.u;
  const double t1 = state_.t + dt;

  auto tf = Clock::now();
  auto [fx, fy] = forcing_load(*fine_, t1);
  const Vector bx = (1.0 / dt) * (fine_->mass * u_old.ux) + fx - fine_->grad_x * state_.p.p;
  const Vector by = (1.0 / dt) * (fine_->mass * u_old.uy) + fy - fine_->grad_y * state_.p.p;
  const SparseMatrix& base = cache_->base(*fine_, 1.0 / dt, cfg_.nu);
  PicardResult pr = picard(*fine_, base, bx, by, last_star_.space ? last_star_ : u_old, cfg_, cache_->work(*fine_, true));
  counters_.fine_operator_rebuilds += pr.iters;
  counters_.krylov_fallbacks += pr.fallbacks;
  r.picard_iters = pr.iters;
  r.picard_converged = pr.converged;
  r.phases.fine = seconds_since(tf);

  auto tp = Clock::now();
  last_star_ = pr.u;
  Projection pj = project(*fine_, pr.u, dt, cfg_.alpha);
  state_.p.p += pj.phi;
  zero_mean_inplace(state_.p.p, fine_->pressure_integrals);
  r.phases.pressure = seconds_since(tp);
  r.compatibility_defect = pj.defect;

  state_.u = std::move(pj.u);
  state_.t = t1;
  ++state_.k;
  return finish(r, u_old, seconds_since(t0));
}

StepReport FlowSolver::step_semi_implicit() {
  const auto t0 = Clock::now();
  StepReport r;
  r.scheme_used = Scheme::semi_implicit;
  const double dt = cfg_.dt;
  const VelocityField u_old = state_.u;
  const double t1 = state_.t + dt;

  auto tf = Clock::now();
  auto [fx, fy] = forcing_load(*fine_, t1);
  auto [nx, ny] = assemble_convection_vector(*fine_->velocity, u_old, u_old);
  const Vector bx = (1.0 / dt) * (fine_->mass * u_old.ux) - nx + fx;
  const Vector by = (1.0 / dt) * (fine_->mass * u_old.uy) - ny + fy;
  auto& op = cache_->constant(*fine_, 1.0 / dt, cfg_.nu, counters_.fine_velocity_factorizations);
  VelocityField ustar{fine_->velocity, op.f.solve(op.sys.rhs(bx, fine_->bc_x)), op.f.solve(op.sys.rhs(by, fine_->bc_y))};
  r.phases.fine = seconds_since(tf);

  auto tp = Clock::now();
  Projection pj = project(*fine_, ustar, dt, 1.0);
  r.phases.pressure = seconds_since(tp);
  r.compatibility_defect = pj.defect;

  state_.u = std::move(pj.u);
  state_.p.p = std::move(pj.phi);
  state_.t = t1;
  ++state_.k;
  return finish(r, u_old, seconds_since(t0));
}

StepReport FlowSolver::step_bigrid() {
  if (!is_bigrid(cfg_.scheme)) throw InvalidParameter("step_bigrid: configured scheme is not a bi-grid variant");
  const auto t0 = Clock::now();
  StepReport r;
  r.scheme_used = cfg_.scheme;
  const Scheme s = cfg_.scheme;
  const bool coarse_projection = s == Scheme::bigrid3 || s == Scheme::bigrid4;
  const bool linearized_fine = s == Scheme::bigrid2 || s == Scheme::bigrid4;
  const double dt = cfg_.dt;
  const double c = (1.0 + cfg_.tau * dt) / dt;
  const VelocityField u_old = state_.u;
  const VelocityField uH_old = state_.uH;
  const double t1 = state_.t + dt;

  // Coarse implicit convection-diffusion, optionally projected.
  auto tc = Clock::now();
  auto [fHx, fHy] = forcing_load(*coarse_, t1);
  const Vector bHx = (1.0 / dt) * (coarse_->mass * uH_old.ux) + fHx;
  const Vector bHy = (1.0 / dt) * (coarse_->mass * uH_old.uy) + fHy;
  const SparseMatrix& baseH = cache_->base(*coarse_, 1.0 / dt, cfg_.nu);
  PicardResult cp = picard(*coarse_, baseH, bHx, bHy, last_coarse_star_.space ? last_coarse_star_ : uH_old, cfg_, cache_->work(*coarse_, false));
  counters_.krylov_fallbacks += cp.fallbacks;
  r.coarse_picard_iters = cp.iters;
  r.picard_converged = cp.converged;
  last_coarse_star_ = cp.u;
  const VelocityField& uH_star = cp.u;
  VelocityField uH_new;
  if (coarse_projection) {
    Projection pjH = project(*coarse_, uH_star, dt, 1.0);
    uH_new = std::move(pjH.u);
    state_.pH.p = std::move(pjH.phi);
  }
  r.phases.coarse = seconds_since(tc);

  auto tt = Clock::now();
  const VelocityField dH{coarse_->velocity, uH_star.ux - uH_old.ux, uH_star.uy - uH_old.uy};
  auto [sx, sy] = stabilization_rhs(dH, false);
  VelocityField wind;
  if (linearized_fine) wind = prolong(*transfer_, uH_star);
  r.phases.transfer = seconds_since(tt);

  // Fine stabilized step.
  auto tf = Clock::now();
  auto [fx, fy] = forcing_load(*fine_, t1);
  VelocityField ustar;
  if (linearized_fine) {
    const Vector bx = c * (fine_->mass * u_old.ux) + sx + fx;
    const Vector by = c * (fine_->mass * u_old.uy) + sy + fy;
    long fb = 0;
    ustar = linearized_solve(*fine_, cache_->base(*fine_, c, cfg_.nu), wind, bx, by, u_old, cache_->work(*fine_, true), fb);
    counters_.krylov_fallbacks += fb;
    ++counters_.fine_operator_rebuilds;
  } else if (s == Scheme::bigrid3 && cfg_.algo3_literal) {
    const Vector bx = c * (fine_->mass * u_old.ux) + sx + fx;
    const Vector by = c * (fine_->mass * u_old.uy) + sy + fy;
    PicardResult pr = picard(*fine_, cache_->base(*fine_, c, cfg_.nu), bx, by, last_star_.space ? last_star_ : u_old, cfg_,
                            cache_->work(*fine_, true));
    counters_.krylov_fallbacks += pr.fallbacks;
    counters_.fine_operator_rebuilds += pr.iters;
    r.picard_iters = pr.iters;
    r.picard_converged = r.picard_converged && pr.converged;
    last_star_ = pr.u;
    ustar = std::move(pr.u);
  } else {
    auto [nx, ny] = assemble_convection_vector(*fine_->velocity, u_old, u_old);
    const Vector bx = c * (fine_->mass * u_old.ux) - nx + sx + fx;
    const Vector by = c * (fine_->mass * u_old.uy) - ny + sy + fy;
    auto& op = cache_->constant(*fine_, c, cfg_.nu, counters_.fine_velocity_factorizations);
    ustar = {fine_->velocity, op.f.solve(op.sys.rhs(bx, fine_->bc_x)), op.f.solve(op.sys.rhs(by, fine_->bc_y))};
  }
  r.phases.fine = seconds_since(tf);

  auto tp = Clock::now();
  Projection pj = project(*fine_, ustar, dt, 1.0);
  r.phases.pressure = seconds_since(tp);
  r.compatibility_defect = pj.defect;
  state_.u = std::move(pj.u);
  state_.p.p = std::move(pj.phi);

  if (coarse_projection) {
    state_.uH = std::move(uH_new);
  } else {
    auto tr = Clock::now();
    state_.uH.ux = transfer_->restrict_l2(state_.u.ux, coarse_->bc_x);
    state_.uH.uy = transfer_->restrict_l2(state_.u.uy, coarse_->bc_y);
    r.phases.transfer += seconds_since(tr);
  }
  state_.t = t1;
  ++state_.k;
  return finish(r, u_old, seconds_since(t0));
}

RunReport run_transient(FlowSolver& solver, const StepObserver& observer) {
  RunReport rep;
  rep.config = solver.config();
  rep.coarse_n = solver.coarse().mesh->n();
  rep.fine_n = solver.fine().mesh->n();
  const SchemeConfig& cfg = solver.config();
  const long steps = cfg.step_count();
  rep.steps.reserve(static_cast<std::size_t>(steps));
  const bool hybrid = cfg.theta_s.has_value() && is_bigrid(cfg.scheme);
  bool switched = false;
  const auto t0 = Clock::now();
  for (long k = 0; k < steps; ++k) {
    StepReport r;
    try {
      r = switched ? solver.step_reference() : solver.step();
    } catch (const NumericalError&) {
      r.step = solver.state().k + 1;
      r.time = solver.state().t + cfg.dt;
      r.stable = false;
      r.dudt_norm = std::numeric_limits<double>::infinity();
    }
    r.switched = switched;
    if (observer && r.stable) observer(solver, r);
    rep.phase_totals += r.phases;
    rep.steps.push_back(r);
    if (!r.stable) {
      rep.stable = false;
      break;
    }
    if (hybrid && !switched && r.dudt_norm <= *cfg.theta_s) {
      switched = true;
      rep.switch_step = r.step;
    }
  }
  rep.wall_total = seconds_since(t0);
  rep.final_state = solver.state();
  rep.counters = solver.counters();
  return rep;
}

RunReport run_transient(const SchemeConfig& cfg, const FlowProblem& problem, int coarse_n, int fine_n,
                        const StepObserver& observer) {
  FlowSolver solver(cfg, problem, coarse_n, fine_n);
  return run_transient(solver, observer);
}

} // namespace bigrid
