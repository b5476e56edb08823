#include "magg/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>

#include "magg/cahn_hilliard.hpp"
#include "magg/errors.hpp"
#include "magg/hydrodynamics.hpp"
#include "magg/io.hpp"

namespace magg {

std::vector<std::string> SimConfig::validate() const {
  if (grid.n < 8 || grid.n % 2 != 0) throw ConfigError("grid.n", "must be even and at least 8");
  if (!(grid.box_length > 0.0) || !std::isfinite(grid.box_length))
    throw ConfigError("grid.box_length", "must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt", "must be positive");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ConfigError("t_end", "must be nonnegative");
  if (!(cfl_number > 0.0 && cfl_number <= 1.0)) throw ConfigError("cfl_number", "must lie in (0, 1]");
  if (flow.pressure_iterations < 0) throw ConfigError("flow.pressure_iterations", "must be >= 0");
  if (flow.implicit_viscosity && !(*flow.implicit_viscosity >= 0.0))
    throw ConfigError("flow.implicit_viscosity", "must be nonnegative");
  if (flow.implicit_omega_diffusion && !(*flow.implicit_omega_diffusion >= 0.0))
    throw ConfigError("flow.implicit_omega_diffusion", "must be nonnegative");
  if (output.ledger_every < 1) throw ConfigError("output.ledger_every", "cadence must be >= 1");
  if (output.snapshot_every < 0) throw ConfigError("output.snapshot_every", "must be >= 0");
  const auto& ic = initial_condition;
  if (ic.kind == InitialKind::TanhStripe) {
    if (!(ic.width > 0.0)) throw ConfigError("initial_condition.width", "must be positive");
    if (!(std::abs(ic.amplitude) <= 1.0)) throw ConfigError("initial_condition.amplitude", "must satisfy |a| <= 1");
  }
  if (ic.kind == InitialKind::FromSnapshot && ic.path.empty())
    throw ConfigError("initial_condition.path", "required for FromSnapshot");
  if (ic.noise.amplitude < 0.0 || ic.noise.max_mode < 0)
    throw ConfigError("initial_condition.noise", "amplitude and max_mode must be nonnegative");
  return params.validate();
}

CoupledOptions CoupledOptions::from_config(const SimConfig& config) {
  CoupledOptions o;
  o.dealias_rule = config.grid.dealias;
  o.pressure_iterations = config.flow.pressure_iterations;
  o.implicit_viscosity = config.flow.implicit_viscosity;
  o.implicit_omega_diffusion = config.flow.implicit_omega_diffusion;
  return o;
}

void EnergyLedger::append(const LedgerRecord& record) {
  if (!records.empty() && !(record.time > records.back().time))
    throw ValidationError("energy ledger: times must be strictly increasing");
  records.push_back(record);
}

double EnergyLedger::max_abs_residual() const {
  double m = 0.0;
  for (std::size_t r = 1; r < records.size(); ++r) m = std::max(m, std::abs(records[r].energy_residual));
  return m;
}

LedgerRecord make_record(const State& state, const ModelParams& params, int step, double energy_residual) {
  LedgerRecord r;
  r.step = step;
  r.time = state.time;
  r.energy = total_energy(state, params);
  r.dissipation = dissipation(state, params);
  r.mass = state.phi.mean() * state.grid().area();
  r.separation = 1.0 - state.phi.max_abs();
  r.max_u = max_norm(state.u);
  r.div_residual = divergence_residual(state.u);
  r.energy_residual = energy_residual;
  return r;
}

// ---------------------------------------------------------------------------
// Initial data

namespace {

Field field_from_spec(const FieldSpec& spec, const GridPtr& grid) {
  const double k0 = grid->k0();
  return Field::from_function(grid, [&](double x, double y) {
    double v = spec.mean;
    for (const auto& m : spec.modes) v += m.amplitude * std::cos(k0 * (m.k[0] * x + m.k[1] * y) + m.phase);
    return v;
  });
}

// Platform-independent uniform draw in [0, 1).
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

FieldSpec noise_modes(const NoiseSpec& noise, std::uint64_t seed) {
  FieldSpec spec;
  if (noise.amplitude == 0.0 || noise.max_mode == 0) return spec;
  std::mt19937_64 rng(seed);
  const int m = noise.max_mode;
  // Half-plane of wavevectors so every real mode appears once.
  for (int ky = -m; ky <= m; ++ky)
    for (int kx = 0; kx <= m; ++kx) {
      if (kx == 0 && ky <= 0) continue;
      const double a = noise.amplitude * (2.0 * uniform01(rng) - 1.0);
      const double ph = 2.0 * std::numbers::pi * uniform01(rng);
      spec.modes.push_back({{kx, ky}, a, ph});
    }
  return spec;
}

}  // namespace

State make_initial_state(const SimConfig& config, const GridPtr& grid) {
  const auto& ic = config.initial_condition;
  const auto rule = config.grid.dealias;
  if (ic.kind == InitialKind::FromSnapshot) {
    State s = read_snapshot(ic.path, config.params, rule);
    if (s.grid().n() != grid->n() || s.grid().box_length() != grid->box_length())
      throw GridMismatch("snapshot grid does not match the configured grid");
    return s;
  }

  Field phi(grid);
  if (ic.kind == InitialKind::TanhStripe) {
    const double L = grid->box_length();
    const double w = ic.width;
    const double a = ic.amplitude;
    phi = Field::from_function(grid, [=](double, double y) {
      return a * (std::tanh((y - 0.25 * L) / w) - std::tanh((y - 0.75 * L) / w) - 1.0);
    });
    phi += field_from_spec(ic.phi, grid);
  } else {
    phi = field_from_spec(ic.phi, grid);
  }
  phi += field_from_spec(noise_modes(ic.noise, config.seed), grid);
  phi = dealias(phi, rule);

  VecField u = dealias(leray_project({field_from_spec(ic.u_x, grid), field_from_spec(ic.u_y, grid)}), rule);
  Field omega = dealias(field_from_spec(ic.omega, grid), rule);
  return make_state(0.0, std::move(u), std::move(omega), std::move(phi), config.params, rule);
}

double cfl_dt(const State& state, double cfl_number, const SpectralGrid& grid, double dt_cap) {
  constexpr double v_floor = 1e-8;
  const double umax = std::max(max_norm(state.u), v_floor);
  return std::min(dt_cap, cfl_number * grid.spacing() / umax);
}

State coupled_step(const State& state, double dt, const CoupledOptions& opts, const ModelParams& params) {
  const ChStepOptions ch_opts = ChStepOptions::from_params(dt, params, opts.dealias_rule);
  const FlowStepOptions flow_opts = FlowStepOptions::from_params(
      dt, params, opts.pressure_iterations, opts.implicit_viscosity, opts.implicit_omega_diffusion, opts.dealias_rule);

  ChStepResult ch = ch_step(state.phi, state.u, ch_opts, params);
  MomentumStepResult mom = momentum_step(state, ch.mu, flow_opts, params);
  Field omega = microrotation_step(state, mom.u, ch.mu, flow_opts, params);

  State next;
  next.time = state.time + dt;
  next.mu = chemical_potential(ch.phi, params, opts.dealias_rule);
  next.phi = std::move(ch.phi);
  next.u = std::move(mom.u);
  next.omega = std::move(omega);
  next.p = std::move(mom.p);
  return next;
}

// ---------------------------------------------------------------------------
// Time loop

namespace {

std::filesystem::path snapshot_path(const std::filesystem::path& dir, const std::string& tag) {
  return dir / ("snapshot_" + tag + ".bin");
}

std::string step_tag(int step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06d", step);
  return buf;
}

}  // namespace

RunResult run(const SimConfig& config, const StepObserver& observer) {
  config.validate();
  const GridPtr grid = make_grid(config.grid.n, config.grid.box_length);
  return run_from(config, make_initial_state(config, grid), observer);
}

RunResult run_from(const SimConfig& config, State initial, const StepObserver& observer) {
  config.validate();
  const CoupledOptions opts = CoupledOptions::from_config(config);
  const ModelParams& params = config.params;
  const bool write = !config.output.directory.empty();
  const std::filesystem::path dir = config.output.directory;
  if (write) std::filesystem::create_directories(dir);

  RunResult result;
  State state = std::move(initial);
  check_separation(state.phi, params);
  check_positivity(state.phi, params);

  LedgerRecord rec = make_record(state, params, 0, 0.0);
  result.ledger.append(rec);
  double energy = rec.energy.total;
  if (observer) observer(state, 0);

  auto flush = [&](const std::string& tag) {
    if (!write) return;
    write_ledger_csv(result.ledger, dir / "ledger.csv");
    const auto path = snapshot_path(dir, tag);
    write_snapshot(state, path);
    result.snapshots.push_back(path);
  };

  const double t_end = config.t_end;
  const double t_tol = 1e-12 * std::max(1.0, t_end);
  int step = 0;
  try {
    while (t_end - state.time > t_tol) {
      double dt = config.dt;
      if (!config.fixed_dt) dt = cfl_dt(state, config.cfl_number, state.grid(), config.dt);
      const double remaining = t_end - state.time;
      if (dt >= remaining || remaining - dt < 1e-9 * dt) dt = remaining;

      State next = coupled_step(state, dt, opts, params);
      if (std::abs(next.time - t_end) <= t_tol) next.time = t_end;
      ++step;
      const bool record_row = step % config.output.ledger_every == 0 || t_end - next.time <= t_tol;
      LedgerRecord r = make_record(next, params, step, 0.0);
      r.energy_residual = (r.energy.total - energy) / dt + r.dissipation.total;
      energy = r.energy.total;
      state = std::move(next);
      if (record_row) result.ledger.append(r);
      if (observer) observer(state, step);
      if (write && config.output.snapshot_every > 0 && step % config.output.snapshot_every == 0) {
        const auto path = snapshot_path(dir, step_tag(step));
        write_snapshot(state, path);
        result.snapshots.push_back(path);
      }
    }
  } catch (const SolverError& e) {
    if (write) {
      flush("failed");
      std::ofstream(dir / "failure.txt") << "step " << step + 1 << " from t = " << state.time << ": " << e.what()
                                         << "\n";
    }
    throw;
  }
  result.steps = step;
  flush("final");
  result.final_state = std::move(state);
  return result;
}

}  // namespace magg
