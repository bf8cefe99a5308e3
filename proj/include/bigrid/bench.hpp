#pragma once

#include "bigrid/errors.hpp"
#include "bigrid/fem.hpp"
#include "bigrid/schemes.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bigrid {

/// Raised when runs that should share a configuration do not.
class InvalidComparison : public InvalidParameter {
public:
  using InvalidParameter::InvalidParameter;
};

struct CaseSpec {
  enum class Kind { cavity, bercovier, rd };
  Kind kind = Kind::cavity;
  double Re = 100.0;

  static CaseSpec cavity(double re) { return {Kind::cavity, re}; }
  static CaseSpec bercovier(double re) { return {Kind::bercovier, re}; }

  /// Boundary data, forcing and initial data. Throws for Kind::rd.
  FlowProblem problem() const;
};

const char* to_string(CaseSpec::Kind k);
CaseSpec::Kind parse_case_kind(const std::string& name);

/// Final times used for cavity runs at the tabulated Reynolds numbers;
/// other values fall back to the next larger entry.
double default_final_time(double re);

// Bercovier-Engelman solution, g(s) = s^2 (1-s)^2:
// u = (-g(x) g'(y), g'(x) g(y)) e^{sin t}, p = (x - 1/2)(y - 1/2).
std::array<double, 2> bercovier_velocity(double x, double y, double t);
double bercovier_pressure(double x, double y);
/// du/dt + (u . grad) u - nu Laplace u + grad p.
std::array<double, 2> bercovier_forcing(double x, double y, double t, double nu);

struct ExactEvaluators {
  std::function<std::array<double, 2>(double, double)> velocity;
  std::function<double(double, double)> pressure;
};
ExactEvaluators bercovier_exact(double t);

/// sqrt of the integral of (u_h - u)^2 by element quadrature.
double l2_error(const FeSpace& space, const Vector& c, const std::function<double(double, double)>& exact);
double l2_error(const VelocityField& u, const std::function<std::array<double, 2>(double, double)>& exact);
/// Pressure error with both fields shifted to zero mean.
double pressure_l2_error(const PressureField& p, const std::function<double(double, double)>& exact);

/// L2 projection of dx u_y - dy u_x onto P1 on the velocity mesh.
PressureField vorticity(const VelocityField& u);
/// P1 solution of (grad psi, grad chi) = (omega, chi), psi = 0 on the
/// boundary; negative inside a clockwise vortex.
PressureField stream_function(const VelocityField& u);

struct Extremum {
  double value = 0.0;
  Point where{};
};
struct Extrema {
  Extremum min;
  Extremum max;
};
Extrema locate_extrema(const FeSpace& space, const Vector& values);

/// Runs a flow case; bercovier runs record velocity and pressure errors
/// before `observer` sees each step.
RunReport run_case(const CaseSpec& c, const SchemeConfig& cfg, int coarse_n, int fine_n,
                   const StepObserver& observer = {});

struct ScanCell {
  Scheme scheme = Scheme::semi_implicit;
  double tau = 0.0;
  double dt = 0.0;
  bool stable = true;
  double t_end = 0.0; ///< last time reached
  long steps = 0;
};

struct ScanRequest {
  Scheme scheme = Scheme::bigrid1;
  double Re = 400.0;
  std::vector<double> taus{0.5};
  std::vector<double> dts{0.05};
  int coarse_n = 40;
  int fine_n = 80;
  double horizon = 5.0;
};

/// Classifies one cavity run integrated to min(horizon, default_final_time).
ScanCell classify(Scheme scheme, double re, double tau, double dt, int coarse_n, int fine_n, double horizon,
                  const StepObserver& observer = {});
std::vector<ScanCell> stability_scan(const ScanRequest& req);
/// Rows tau, columns dt, entries yes/no.
std::string format_scan_table(const std::vector<ScanCell>& cells);

/// Largest dt of the ascending ladder reached before the first unstable one;
/// 0 when the smallest is already unstable.
double max_stable_dt(Scheme scheme, double re, double tau, const std::vector<double>& ladder, int coarse_n, int fine_n,
                     double horizon, const StepObserver& observer = {});

struct DtGain {
  double max_dt_baseline = 0.0;
  double max_dt_bigrid = 0.0;
  double ratio = 0.0;
};
DtGain dt_gain_report(double max_dt_baseline, double max_dt_bigrid);

struct CpuRow {
  std::string label;
  double t_1g = 0.0;
  double t_2g = 0.0;
  double ratio = 0.0;
  bool hybrid = false;
  PhaseTimes phases;
};
/// One row per bi-grid run against the reference run. Throws
/// InvalidComparison unless nu, dt, T and the meshes agree.
std::vector<CpuRow> cpu_report(const RunReport& reference, const std::vector<RunReport>& bigrid);
std::string format_cpu_table(const std::vector<CpuRow>& rows);

/// dudt_norm of the first reference step that needed a single Picard
/// iteration, the regime in which switching to the reference costs nothing.
std::optional<double> calibrate_theta_s(const RunReport& reference);

} // namespace bigrid
