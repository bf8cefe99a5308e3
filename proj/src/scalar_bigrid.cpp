#include "bigrid/scalar_bigrid.hpp"

#include "bigrid/errors.hpp"

#include <cmath>

namespace bigrid {

namespace {

std::vector<double> basis_table(const FeSpace& space) {
  const auto& rule = degree4_rule();
  const int nl = space.dofs_per_cell();
  std::vector<double> tab(rule.points.size() * nl);
  for (std::size_t q = 0; q < rule.points.size(); ++q)
    space.shape_values(rule.points[q], std::span<double>(tab.data() + q * nl, nl));
  return tab;
}

BoundaryData zero_data(const std::vector<int>& dofs) { return {dofs, std::vector<double>(dofs.size(), 0.0)}; }

bool bounded(const Vector& v, double threshold) { return v.allFinite() && v.cwiseAbs().maxCoeff() <= threshold; }

} // namespace

void RdConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameter("RdConfig: dt must be positive");
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw InvalidParameter("RdConfig: tau must be nonnegative");
  if (!(T >= dt * (1.0 - 1e-12))) throw InvalidParameter("RdConfig: T must be at least dt");
  if (!(newton_tol > 0.0) || newton_max < 1) throw InvalidParameter("RdConfig: bad Newton settings");
}

long RdConfig::step_count() const { return std::lround(T / dt); }

double rd_f(RdConfig::Nonlinearity f, double u) noexcept {
  return f == RdConfig::Nonlinearity::cubic ? u * u * u - u : 0.0;
}

double rd_df(RdConfig::Nonlinearity f, double u) noexcept {
  return f == RdConfig::Nonlinearity::cubic ? 3.0 * u * u - 1.0 : 0.0;
}

Vector assemble_nonlinear_load(const FeSpace& space, const Vector& c, const std::function<double(double)>& g) {
  if (c.size() != space.dof_count()) throw InvalidParameter("assemble_nonlinear_load: length mismatch");
  const auto& rule = degree4_rule();
  const int nl = space.dofs_per_cell();
  const auto tab = basis_table(space);
  Vector out = Vector::Zero(space.dof_count());
  for (int t = 0; t < space.cell_count(); ++t) {
    const double scale = 2.0 * space.mesh().triangle_area(t);
    auto dofs = space.cell_dofs(t);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double* phi = tab.data() + q * nl;
      double u = 0.0;
      for (int a = 0; a < nl; ++a) u += c[dofs[a]] * phi[a];
      const double w = rule.weights[q] * scale * g(u);
      for (int a = 0; a < nl; ++a) out[dofs[a]] += w * phi[a];
    }
  }
  return out;
}

SparseMatrix assemble_weighted_mass(const FeSpace& space, const Vector& c, const std::function<double(double)>& g) {
  if (c.size() != space.dof_count()) throw InvalidParameter("assemble_weighted_mass: length mismatch");
  const auto& rule = degree4_rule();
  const int nl = space.dofs_per_cell();
  const auto tab = basis_table(space);
  SparseMatrix m = space.pattern();
  double* v = m.valuePtr();
  for (int t = 0; t < space.cell_count(); ++t) {
    const double scale = 2.0 * space.mesh().triangle_area(t);
    auto dofs = space.cell_dofs(t);
    auto pos = space.cell_positions(t);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double* phi = tab.data() + q * nl;
      double u = 0.0;
      for (int a = 0; a < nl; ++a) u += c[dofs[a]] * phi[a];
      const double w = rule.weights[q] * scale * g(u);
      for (int a = 0; a < nl; ++a)
        for (int b = 0; b < nl; ++b) v[pos[a * nl + b]] += w * phi[a] * phi[b];
    }
  }
  return m;
}

RdSolver::RdSolver(const RdConfig& cfg, int coarse_n, int fine_n, const std::function<double(double, double)>& u0)
    : cfg_((cfg.validate(), cfg)),
      coarse_(std::make_shared<const FeSpace>(std::make_shared<const TriMesh>(build_uniform_mesh(coarse_n)), ElementKind::P2)),
      fine_(std::make_shared<const FeSpace>(std::make_shared<const TriMesh>(build_uniform_mesh(fine_n)), ElementKind::P2)),
      transfer_(coarse_, fine_),
      MH_(assemble_mass(*coarse_)),
      KH_(assemble_stiffness(*coarse_)),
      Mh_(assemble_mass(*fine_)),
      Kh_(assemble_stiffness(*fine_)) {
  if (cfg_.boundary == RdConfig::Boundary::dirichlet_zero) {
    constrained_H_ = coarse_->boundary_dofs();
    constrained_h_ = fine_->boundary_dofs();
  }
  state_.uh = fine_->interpolate(u0);
  impose(state_.uh, zero_data(constrained_h_));
  state_.uH = constrained_H_.empty() ? transfer_.restrict_l2(state_.uh)
                                     : transfer_.restrict_l2(state_.uh, zero_data(constrained_H_));
}

void RdSolver::set_state(RdState s) {
  if (s.uh.size() != fine_->dof_count() || s.uH.size() != coarse_->dof_count())
    throw InvalidParameter("RdSolver::set_state: length mismatch");
  state_ = std::move(s);
}

int RdSolver::newton(const FeSpace& space, const SparseMatrix& M, const SparseMatrix& K, Vector& u,
                     const Vector& u_old) const {
  const auto& constrained = (&space == coarse_.get()) ? constrained_H_ : constrained_h_;
  const BoundaryData zero = zero_data(constrained);
  const auto f = [&](double s) { return rd_f(cfg_.f, s); };
  const auto df = [&](double s) { return rd_df(cfg_.f, s); };
  const double inv_dt = 1.0 / cfg_.dt;
  for (int it = 1; it <= cfg_.newton_max; ++it) {
    Vector res = inv_dt * (M * (u - u_old)) + K * u + assemble_nonlinear_load(space, u, f);
    SparseMatrix jac = inv_dt * M + K + assemble_weighted_mass(space, u, df);
    DirichletSystem sys(jac, constrained);
    Factorization lu(sys.matrix(), SolverMethod::direct_lu, 1e-12);
    const Vector du = lu.solve(sys.rhs(-res, zero));
    u += du;
    if (!u.allFinite()) return -it;
    if (std::sqrt(du.dot(M * du)) <= cfg_.newton_tol * std::max(1.0, std::sqrt(u.dot(M * u)))) return it;
  }
  return -cfg_.newton_max;
}

RdStepReport RdSolver::finish(RdStepReport r) {
  state_.t += cfg_.dt;
  ++state_.k;
  r.step = state_.k;
  r.time = state_.t;
  r.l2_fine = state_.uh.allFinite() ? std::sqrt(state_.uh.dot(Mh_ * state_.uh)) : INFINITY;
  r.stable = bounded(state_.uh, cfg_.blowup_threshold) && bounded(state_.uH, cfg_.blowup_threshold);
  return r;
}

RdStepReport RdSolver::step_plain() {
  RdStepReport r;
  Vector uH = state_.uH;
  const int it = newton(*coarse_, MH_, KH_, uH, state_.uH);
  r.newton_iters = std::abs(it);
  r.newton_converged = it > 0;

  const Vector& uk = state_.uh;
  const Vector wind = transfer_.prolong(uH);
  const double inv_dt = 1.0 / cfg_.dt;
  const SparseMatrix J = assemble_weighted_mass(*fine_, wind, [&](double s) { return rd_df(cfg_.f, s); });
  const SparseMatrix a = inv_dt * Mh_ + Kh_ + J;
  const Vector b = inv_dt * (Mh_ * uk) - assemble_nonlinear_load(*fine_, uk, [&](double s) { return rd_f(cfg_.f, s); }) + J * uk;
  DirichletSystem sys(a, constrained_h_);
  Factorization lu(sys.matrix(), SolverMethod::direct_lu, 1e-12);
  state_.uh = lu.solve(sys.rhs(b, zero_data(constrained_h_)));
  state_.uH = std::move(uH);
  return finish(r);
}

RdStepReport RdSolver::step_stabilized() {
  RdStepReport r;
  Vector uH = state_.uH;
  const int it = newton(*coarse_, MH_, KH_, uH, state_.uH);
  r.newton_iters = std::abs(it);
  r.newton_converged = it > 0;

  const double c = (1.0 + cfg_.tau * cfg_.dt) / cfg_.dt;
  if (!stab_factor_) {
    stab_system_ = std::make_unique<DirichletSystem>(SparseMatrix(c * Mh_ + Kh_), constrained_h_);
    stab_factor_ = std::make_unique<Factorization>(stab_system_->matrix(), SolverMethod::direct_ldlt, 1e-12);
    ++fine_factorizations_;
  }
  const Vector& uk = state_.uh;
  const Vector b = c * (Mh_ * uk) - assemble_nonlinear_load(*fine_, uk, [&](double s) { return rd_f(cfg_.f, s); }) +
                   cfg_.tau * (Mh_ * transfer_.prolong(uH - state_.uH));
  state_.uh = stab_factor_->solve(stab_system_->rhs(b, zero_data(constrained_h_)));
  state_.uH = std::move(uH);
  return finish(r);
}

RdStepReport RdSolver::step_implicit_fine() {
  RdStepReport r;
  Vector u = state_.uh;
  const int it = newton(*fine_, Mh_, Kh_, u, state_.uh);
  r.newton_iters = std::abs(it);
  r.newton_converged = it > 0;
  state_.uh = std::move(u);
  return finish(r);
}

RdStepReport rd_step_bigrid_plain(RdSolver& s) { return s.step_plain(); }
RdStepReport rd_step_bigrid_stabilized(RdSolver& s) { return s.step_stabilized(); }

} // namespace bigrid
