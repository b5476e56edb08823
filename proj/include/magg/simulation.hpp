#pragma once

// The coupled time loop: Cahn-Hilliard, then momentum with the fresh chemical
// potential, then micro-rotation with the fresh velocity.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "magg/model.hpp"
#include "magg/spectral.hpp"

namespace magg {

struct ModeSpec {
  std::array<int, 2> k{0, 0};  // integer wavenumbers, physical k = 2 pi / L * k
  double amplitude = 0.0;
  double phase = 0.0;
  bool operator==(const ModeSpec&) const = default;
};

/// f(x, y) = mean + sum amplitude * cos(k . x + phase).
struct FieldSpec {
  double mean = 0.0;
  std::vector<ModeSpec> modes;
  bool operator==(const FieldSpec&) const = default;
};

/// Seeded smooth perturbation of phi: every mode with 0 < max(|kx|,|ky|) <= max_mode
/// gets a uniform random amplitude in [-amplitude, amplitude] and a random phase.
struct NoiseSpec {
  double amplitude = 0.0;
  int max_mode = 0;
  bool operator==(const NoiseSpec&) const = default;
};

enum class InitialKind { UniformPlusModes, TanhStripe, FromSnapshot };

struct InitialCondition {
  InitialKind kind = InitialKind::UniformPlusModes;
  FieldSpec phi;
  FieldSpec u_x;  // velocity specs are Leray-projected
  FieldSpec u_y;
  FieldSpec omega;
  NoiseSpec noise;
  double width = 0.3;       // TanhStripe: interface width
  double amplitude = 0.9;   // TanhStripe: plateau value
  std::string path;         // FromSnapshot
  bool operator==(const InitialCondition&) const = default;
};

struct GridSpec {
  int n = 64;
  double box_length = 2.0 * std::numbers::pi;
  DealiasRule dealias = DealiasRule::TwoThirds;
  bool operator==(const GridSpec&) const = default;
};

struct FlowSpec {
  int pressure_iterations = 40;
  std::optional<double> implicit_viscosity;
  std::optional<double> implicit_omega_diffusion;
  bool operator==(const FlowSpec&) const = default;
};

struct OutputSpec {
  std::string directory;  // empty: no files
  int ledger_every = 1;
  int snapshot_every = 0;  // 0: only the final snapshot
  bool operator==(const OutputSpec&) const = default;
};

struct SimConfig {
  GridSpec grid;
  ModelParams params;
  double dt = 1e-3;
  double t_end = 0.25;
  double cfl_number = 0.4;
  bool fixed_dt = false;  // true: never shrink dt, raise CflViolation instead
  FlowSpec flow;
  OutputSpec output;
  std::uint64_t seed = 0;
  InitialCondition initial_condition;

  /// Throws ConfigError naming the offending field; returns model warnings.
  std::vector<std::string> validate() const;
  bool operator==(const SimConfig&) const = default;
};

struct CoupledOptions {
  DealiasRule dealias_rule = DealiasRule::TwoThirds;
  int pressure_iterations = 40;
  std::optional<double> implicit_viscosity;
  std::optional<double> implicit_omega_diffusion;

  static CoupledOptions from_config(const SimConfig& config);
};

struct LedgerRecord {
  int step = 0;
  double time = 0.0;
  EnergyBreakdown energy;
  DissipationBreakdown dissipation;
  double mass = 0.0;
  double separation = 0.0;
  double max_u = 0.0;
  double div_residual = 0.0;
  double energy_residual = 0.0;  // (E^{n+1} - E^n)/dt + D^{n+1}; zero on the first row
};

struct EnergyLedger {
  std::vector<LedgerRecord> records;

  /// Appends a record; times must be strictly increasing.
  void append(const LedgerRecord& record);
  double max_abs_residual() const;
};

LedgerRecord make_record(const State& state, const ModelParams& params, int step, double energy_residual);

/// Builds the initial state on the given grid. Specs are band-limited and
/// dealiased; the velocity is projected onto divergence-free fields.
State make_initial_state(const SimConfig& config, const GridPtr& grid);

double cfl_dt(const State& state, double cfl_number, const SpectralGrid& grid, double dt_cap);

State coupled_step(const State& state, double dt, const CoupledOptions& opts, const ModelParams& params);

struct RunResult {
  State final_state;
  EnergyLedger ledger;
  std::vector<std::filesystem::path> snapshots;
  int steps = 0;
};

/// Called with the initial state (step 0) and after every accepted step.
using StepObserver = std::function<void(const State&, int step)>;

/// Integrates to t_end. Deterministic in (config, seed). On a solver error the
/// ledger and a snapshot tagged "failed" are flushed before rethrowing.
RunResult run(const SimConfig& config, const StepObserver& observer = {});

/// Same as run() but starting from a given state instead of the configured
/// initial condition.
RunResult run_from(const SimConfig& config, State initial, const StepObserver& observer = {});

}  // namespace magg
