#pragma once

// Difference norms between trajectories, parameter sweeps against the reduced
// models, energy-law order measurement and spatial self-convergence.

#include <optional>
#include <string>
#include <vector>

#include "magg/errors.hpp"
#include "magg/simulation.hpp"

namespace magg {

struct DiffReport {
  double sup_u_l2_sq = 0.0;
  double sup_omega_l2_sq = 0.0;
  double sup_phi_h2_sq = 0.0;
  double combined = 0.0;  // sum of the three suprema
  std::vector<double> sample_times;
};

/// Running supremum of ||u_a - u_b||^2, ||omega_a - omega_b||^2 and
/// ||phi_a - phi_b||^2_{H^2} over sampled times.
class DiffAccumulator {
public:
  void add(const State& a, const State& b);
  DiffReport finalize() const;

private:
  DiffReport report_;
};

/// Adds one sample to acc and returns the current report.
DiffReport difference_norms(const State& a, const State& b, DiffAccumulator& acc);

/// Single-sample convenience.
DiffReport difference_norms(const State& a, const State& b);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares of log(y) against log(x). Needs at least two
/// points, all strictly positive.
LinearFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct SweepReport {
  std::string parameter;                // "eta_r" or "density_mismatch"
  std::vector<double> parameter_values;
  std::vector<double> fit_abscissa;     // eta_r, or eta_r + mismatch
  std::vector<DiffReport> diffs;
  std::vector<double> errors;           // combined values
  std::optional<double> fitted_slope;
  std::optional<double> fit_r2;
  bool complete = true;
  std::string failure;
};

/// A sweep run failed; carries everything gathered before the failure.
class SweepAborted : public SolverError {
public:
  SweepAborted(SweepReport partial, const std::string& what)
      : SolverError(what), partial_(std::move(partial)) {}
  const SweepReport& partial() const noexcept { return partial_; }

private:
  SweepReport partial_;
};

/// MAGG runs with constant eta_r = value against one AGG reference run.
/// Requires omega^0 = 0 and strictly decreasing values in (0, inf). All runs
/// use the fixed dt of base_config.
SweepReport etar_sweep(const SimConfig& base_config, const std::vector<double>& etar_values);

/// MAGG runs with rho1,2 = rho_bar +- mismatch/2 against one Model H run with
/// density rho_bar. Values strictly decreasing and >= 0; the error is fitted
/// against eta_r + mismatch (points where that sum vanishes are left out).
SweepReport modelh_sweep(const SimConfig& base_config, const std::vector<double>& mismatch_values);

struct EnergyOrderReport {
  std::vector<double> dt_values;
  std::vector<double> max_residuals;
  std::vector<double> ratios;  // residual(dt_i) / residual(dt_{i+1})
  std::optional<double> fitted_order;
  bool fit_skipped = false;  // residuals at roundoff level
};

EnergyOrderReport energy_order(const SimConfig& base_config, const std::vector<double>& dt_values);

struct ConvergenceReport {
  std::vector<int> grids;
  std::vector<double> errors;  // against the finest grid; last entry is 0
};

/// Runs the same configuration on each grid and measures
/// sqrt(||u - u_f||^2 + ||omega - omega_f||^2 + ||phi - phi_f||^2) at t_end,
/// coarse fields zero-padded to the finest grid.
ConvergenceReport convergence(const SimConfig& base_config, const std::vector<int>& grids);

}  // namespace magg
