#pragma once

#include "bigrid/fem.hpp"
#include "bigrid/linalg.hpp"
#include "bigrid/mesh.hpp"
#include "bigrid/transfer.hpp"

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace bigrid {

enum class Scheme { reference, incremental, semi_implicit, bigrid1, bigrid2, bigrid3, bigrid4 };

/// Hyphenated name as used on the command line, e.g. "semi-implicit".
const char* to_string(Scheme s);
/// Accepts the hyphenated and underscored spellings. Throws InvalidParameter.
Scheme parse_scheme(const std::string& name);
bool is_bigrid(Scheme s) noexcept;

struct SchemeConfig {
  Scheme scheme = Scheme::bigrid1;
  double nu = 1.0 / 400.0;
  double dt = 1e-2;
  double tau = 0.5;
  double alpha = 1.0;
  double T = 1.0;
  std::optional<double> theta_s;
  double picard_tol = 1e-8;
  int picard_max = 50;
  double blowup_threshold = 1e3;
  /// Implicit (Picard) fine convection in bigrid3 instead of the explicit form.
  bool algo3_literal = false;

  /// Throws InvalidParameter when a field is out of range.
  void validate() const;
  long step_count() const;
};

/// Boundary data, forcing and initial data of a flow problem.
struct FlowProblem {
  enum class Boundary { lid, no_slip };
  Boundary boundary = Boundary::lid;
  /// f(x, y, t); empty means zero.
  std::function<std::array<double, 2>(double, double, double)> forcing;
  /// Interior initial velocity; boundary dofs always take the boundary data.
  std::function<std::array<double, 2>(double, double)> initial_velocity;
  std::function<double(double, double)> initial_pressure;
};

/// Operators of one grid level, all built once.
class Level {
public:
  Level(int n, FlowProblem::Boundary boundary);

  std::shared_ptr<const TriMesh> mesh;
  std::shared_ptr<const FeSpace> velocity;
  std::shared_ptr<const FeSpace> pressure;
  SparseMatrix mass;
  SparseMatrix stiffness;
  SparseMatrix grad_x, grad_y; ///< pressure coefficients to velocity loads
  SparseMatrix div_x, div_y;   ///< velocity coefficients to pressure loads
  Vector pressure_integrals;
  BoundaryData bc_x, bc_y;
  DirichletSystem mass_system;
  Factorization mass_factor;
  NeumannPoisson pressure_solver;
};

struct FlowState {
  VelocityField u;
  PressureField p;
  VelocityField uH;
  PressureField pH; ///< coarse pressure, used by bigrid3 and bigrid4
  double t = 0.0;
  long k = 0;
};

struct PhaseTimes {
  double coarse = 0.0;
  double fine = 0.0;
  double pressure = 0.0;
  double transfer = 0.0;

  double total() const noexcept { return coarse + fine + pressure + transfer; }
  PhaseTimes& operator+=(const PhaseTimes& o) noexcept {
    coarse += o.coarse;
    fine += o.fine;
    pressure += o.pressure;
    transfer += o.transfer;
    return *this;
  }
};

struct StepReport {
  long step = 0;
  double time = 0.0;
  double dudt_norm = 0.0;
  int picard_iters = 0;        ///< fine Picard solves (0 for single-solve fine steps)
  int coarse_picard_iters = 0; ///< coarse Picard solves of a bigrid step
  bool picard_converged = true;
  double wall_seconds = 0.0;
  PhaseTimes phases;
  bool stable = true;
  bool switched = false;
  Scheme scheme_used = Scheme::reference;
  double compatibility_defect = 0.0;
  std::optional<double> err_u;
  std::optional<double> err_p;
};

/// Direct factorizations and operator rebuilds performed by one solver.
struct OperatorCounters {
  int fine_velocity_factorizations = 0;
  int fine_mass_factorizations = 0;
  int fine_pressure_factorizations = 0;
  int coarse_factorizations = 0;
  long fine_operator_rebuilds = 0;
  long krylov_fallbacks = 0;
};

/// ||u_new - u_old|| / dt in the vector L2 norm.
double dudt_norm(const VelocityField& u_new, const VelocityField& u_old, double dt);
double dudt_norm(const SparseMatrix& mass, const VelocityField& u_new, const VelocityField& u_old, double dt);

/// Time stepper holding both grid levels and the current state.
class FlowSolver {
public:
  /// Throws InvalidParameter for a bad configuration or fine_n != 2 coarse_n.
  FlowSolver(const SchemeConfig& cfg, FlowProblem problem, int coarse_n, int fine_n);
  ~FlowSolver();
  FlowSolver(const FlowSolver&) = delete;
  FlowSolver& operator=(const FlowSolver&) = delete;

  const SchemeConfig& config() const noexcept { return cfg_; }
  const FlowProblem& problem() const noexcept { return problem_; }
  const FlowState& state() const noexcept { return state_; }
  void set_state(FlowState s);

  const Level& fine() const noexcept { return *fine_; }
  const Level& coarse() const noexcept { return *coarse_; }
  const TransferOps& transfer() const noexcept { return *transfer_; }
  const OperatorCounters& counters() const noexcept { return counters_; }

  /// Advances with the configured scheme.
  StepReport step();
  StepReport step_reference();
  StepReport step_incremental();
  StepReport step_semi_implicit();
  StepReport step_bigrid();

  /// tau (dU_H, phi_h) for both components, by fine mass times prolongation
  /// or by the transposed cross mass.
  std::pair<Vector, Vector> stabilization_rhs(const VelocityField& coarse_increment, bool via_cross_mass) const;

  /// Largest velocity coefficient on the grids in use, infinity if any
  /// field is non-finite.
  double max_coefficient() const;

private:
  struct Cache;

  StepReport finish(StepReport r, const VelocityField& u_old, double t0_wall);
  std::pair<Vector, Vector> forcing_load(const Level& level, double t) const;

  SchemeConfig cfg_;
  FlowProblem problem_;
  std::unique_ptr<Level> fine_;
  std::unique_ptr<Level> coarse_;
  std::unique_ptr<TransferOps> transfer_;
  std::unique_ptr<Cache> cache_;
  FlowState state_;
  OperatorCounters counters_;
  // Previous implicit-convection results, used as Picard starting points.
  // Empty after construction and set_state.
  VelocityField last_star_;
  VelocityField last_coarse_star_;
};

struct RunReport {
  SchemeConfig config;
  int coarse_n = 0;
  int fine_n = 0;
  std::vector<StepReport> steps;
  FlowState final_state;
  PhaseTimes phase_totals;
  double wall_total = 0.0;
  bool stable = true;
  std::optional<long> switch_step;
  OperatorCounters counters;
};

/// Called after every step; may fill the error fields of the report.
using StepObserver = std::function<void(const FlowSolver&, StepReport&)>;

/// Steps from t = 0 to T. With theta_s set, a bigrid run switches for good
/// to the reference scheme after the first step whose dudt_norm <= theta_s.
/// Halts at the first unstable step.
RunReport run_transient(const SchemeConfig& cfg, const FlowProblem& problem, int coarse_n, int fine_n,
                        const StepObserver& observer = {});
RunReport run_transient(FlowSolver& solver, const StepObserver& observer = {});

} // namespace bigrid
