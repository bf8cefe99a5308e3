#pragma once

#include "bigrid/fem.hpp"
#include "bigrid/linalg.hpp"
#include "bigrid/transfer.hpp"

#include <functional>
#include <memory>

namespace bigrid {

/// du/dt - Laplace u + f(u) = 0 on the unit square.
struct RdConfig {
  enum class Nonlinearity { zero, cubic }; ///< cubic: f(u) = u^3 - u
  enum class Boundary { dirichlet_zero, neumann };

  double dt = 1e-2;
  double tau = 0.0;
  double T = 1.0;
  Nonlinearity f = Nonlinearity::cubic;
  Boundary boundary = Boundary::dirichlet_zero;
  double newton_tol = 1e-10;
  int newton_max = 30;
  double blowup_threshold = 1e3;

  void validate() const;
  long step_count() const;
};

double rd_f(RdConfig::Nonlinearity f, double u) noexcept;
double rd_df(RdConfig::Nonlinearity f, double u) noexcept;

/// (g(u_h), phi_i) by quadrature, u_h with coefficients c.
Vector assemble_nonlinear_load(const FeSpace& space, const Vector& c, const std::function<double(double)>& g);
/// (g(u_h) phi_j, phi_i) on the space pattern.
SparseMatrix assemble_weighted_mass(const FeSpace& space, const Vector& c, const std::function<double(double)>& g);

struct RdState {
  Vector uh;
  Vector uH;
  double t = 0.0;
  long k = 0;
};

struct RdStepReport {
  long step = 0;
  double time = 0.0;
  double l2_fine = 0.0;
  int newton_iters = 0;
  bool newton_converged = true;
  bool stable = true;
};

/// Coarse/fine pair of P2 spaces for the reaction-diffusion testbed.
class RdSolver {
public:
  RdSolver(const RdConfig& cfg, int coarse_n, int fine_n, const std::function<double(double, double)>& u0);

  const RdConfig& config() const noexcept { return cfg_; }
  const RdState& state() const noexcept { return state_; }
  /// Throws InvalidParameter when a vector length does not match its space.
  void set_state(RdState s);
  const TransferOps& transfer() const noexcept { return transfer_; }
  const SparseMatrix& fine_mass() const noexcept { return Mh_; }
  /// Direct factorizations of the constant fine operator so far.
  int fine_factorizations() const noexcept { return fine_factorizations_; }

  /// Coarse backward Euler, then the fine step with f(u^k) explicit and the
  /// correction f'(P u_H^{k+1}) (u^{k+1} - u^k) implicit.
  RdStepReport step_plain();
  /// Coarse backward Euler, then the fine step
  /// ((u'-u)/dt, v) + tau (u'-u, v) + (grad u', grad v) + (f(u), v) = tau (dU_H, v).
  RdStepReport step_stabilized();
  /// Fully implicit backward Euler on the fine grid alone (reference).
  RdStepReport step_implicit_fine();

private:
  // Backward Euler for one level by Newton; returns iterations, negative
  // when not converged.
  int newton(const FeSpace& space, const SparseMatrix& M, const SparseMatrix& K, Vector& u, const Vector& u_old) const;
  RdStepReport finish(RdStepReport r);

  RdConfig cfg_;
  std::shared_ptr<const FeSpace> coarse_;
  std::shared_ptr<const FeSpace> fine_;
  TransferOps transfer_;
  SparseMatrix MH_, KH_, Mh_, Kh_;
  std::vector<int> constrained_H_, constrained_h_;
  std::unique_ptr<DirichletSystem> stab_system_;
  std::unique_ptr<Factorization> stab_factor_;
  int fine_factorizations_ = 0;
  RdState state_;
};

RdStepReport rd_step_bigrid_plain(RdSolver& s);
RdStepReport rd_step_bigrid_stabilized(RdSolver& s);

} // namespace bigrid
