#pragma once

#include "bigrid/bench.hpp"
#include "bigrid/scalar_bigrid.hpp"
#include "bigrid/schemes.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bigrid {

struct OutputSpec {
  std::filesystem::path out_dir = "out";
  bool write_vtk = false;
  int vtk_every = 0; ///< 0 writes only the final state when write_vtk is set
  bool write_csv = true;
  bool dump_raw = false;
};

struct CliOptions {
  CaseSpec spec;
  SchemeConfig cfg;
  int coarse_n = 40;
  int fine_n = 80;
  OutputSpec output;
  bool scan = false;
  std::vector<double> scan_taus;
  std::vector<double> scan_dts;
  double scan_horizon = 5.0;
  bool seedless = false;
  // Reaction-diffusion case.
  RdConfig rd;
  bool rd_stabilized = true;
  double rd_amplitude = 0.1;
};

struct ParseOutcome {
  std::optional<CliOptions> options;
  int exit_code = 0; ///< 2 for usage errors, 0 for --help
  std::string message;
};

/// Never throws; usage problems come back with exit code 2.
ParseOutcome parse_args(int argc, const char* const* argv);
/// Arguments without the program name.
ParseOutcome parse_args(const std::vector<std::string>& args);

/// Flags that reproduce `o` exactly when parsed again.
std::vector<std::string> canonical_args(const CliOptions& o);
std::string canonical_echo(const CliOptions& o);

/// Header only for an empty report. Throws std::runtime_error naming the path.
void write_csv_series(const RunReport& report, const std::filesystem::path& path);
/// Vertex values of the P2 velocity, P1 pressure and two P1 auxiliaries.
void write_vtk_fields(const VelocityField& u, const PressureField& p, const PressureField& vort,
                      const PressureField& stream, const std::filesystem::path& path);

/// Executes a parsed command line; returns the process exit code.
int run_cli(const CliOptions& o);

} // namespace bigrid
