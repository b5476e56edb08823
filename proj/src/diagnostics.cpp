#include "magg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <string>

namespace magg {

void DiffAccumulator::add(const State& a, const State& b) {
  if (a.grid().n() != b.grid().n() || a.grid().box_length() != b.grid().box_length())
    throw GridMismatch("difference_norms: states live on different grids");
  const double du = sobolev_norm_sq(a.u - b.u, 0);
  const double dw = sobolev_norm_sq(a.omega - b.omega, 0);
  const double dp = sobolev_norm_sq(a.phi - b.phi, 2);
  report_.sup_u_l2_sq = std::max(report_.sup_u_l2_sq, du);
  report_.sup_omega_l2_sq = std::max(report_.sup_omega_l2_sq, dw);
  report_.sup_phi_h2_sq = std::max(report_.sup_phi_h2_sq, dp);
  report_.combined = report_.sup_u_l2_sq + report_.sup_omega_l2_sq + report_.sup_phi_h2_sq;
  report_.sample_times.push_back(a.time);
}

DiffReport DiffAccumulator::finalize() const { return report_; }

DiffReport difference_norms(const State& a, const State& b, DiffAccumulator& acc) {
  acc.add(a, b);
  return acc.finalize();
}

DiffReport difference_norms(const State& a, const State& b) {
  DiffAccumulator acc;
  return difference_norms(a, b, acc);
}

LinearFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ValidationError("fit_loglog: size mismatch");
  if (x.size() < 2) throw ValidationError("fit_loglog: at least two points are required");
  const std::size_t m = x.size();
  std::vector<double> lx(m), ly(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ValidationError("fit_loglog: values must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) throw ValidationError("fit_loglog: abscissae coincide");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    sse += r * r;
  }
  fit.r2 = syy == 0.0 ? 1.0 : 1.0 - sse / syy;
  return fit;
}

namespace {

void require_decreasing(const std::vector<double>& v, const char* what) {
  if (v.empty()) throw ValidationError(std::string(what) + ": the value list is empty");
  for (double x : v)
    if (!std::isfinite(x)) throw ValidationError(std::string(what) + ": values must be finite");
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) throw ValidationError(std::string(what) + ": values must be strictly decreasing");
}

SimConfig sweep_base(const SimConfig& base) {
  SimConfig c = base;
  c.fixed_dt = true;
  c.output = {};
  return c;
}

// Whole trajectory of the reference run, one state per step.
std::vector<State> record_trajectory(const SimConfig& config) {
  std::vector<State> states;
  run(config, [&](const State& s, int) { states.push_back(s); });
  return states;
}

DiffReport compare_against(const SimConfig& config, const std::vector<State>& reference) {
  DiffAccumulator acc;
  run(config, [&](const State& s, int step) {
    const auto k = static_cast<std::size_t>(step);
    if (k >= reference.size() || reference[k].time != s.time)
      throw SolverError("sweep: time levels diverge from the reference run");
    acc.add(s, reference[k]);
  });
  return acc.finalize();
}

void fit_report(SweepReport& report) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < report.errors.size(); ++i)
    if (report.fit_abscissa[i] > 0.0 && report.errors[i] > 0.0) {
      x.push_back(report.fit_abscissa[i]);
      y.push_back(report.errors[i]);
    }
  if (x.size() < 2) return;
  const LinearFit fit = fit_loglog(x, y);
  report.fitted_slope = fit.slope;
  report.fit_r2 = fit.r2;
}

// Runs every candidate concurrently and reduces in list order.
SweepReport run_sweep(SweepReport report, const std::vector<SimConfig>& configs,
                      const std::vector<State>& reference) {
  std::vector<std::future<DiffReport>> jobs;
  jobs.reserve(configs.size());
  for (const auto& c : configs)
    jobs.push_back(std::async(std::launch::async, [&c, &reference] { return compare_against(c, reference); }));

  std::vector<DiffReport> results(configs.size());
  std::string failure;
  std::size_t first_failed = configs.size();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    try {
      results[i] = jobs[i].get();
    } catch (const std::exception& e) {
      if (first_failed == configs.size()) {
        first_failed = i;
        failure = "run " + std::to_string(i) + " (" + report.parameter + " = " +
                  std::to_string(report.parameter_values[i]) + ") failed: " + e.what();
      }
    }
  }
  const std::size_t done = first_failed;
  for (std::size_t i = 0; i < done; ++i) {
    report.diffs.push_back(results[i]);
    report.errors.push_back(results[i].combined);
  }
  if (first_failed != configs.size()) {
    report.parameter_values.resize(done);
    report.fit_abscissa.resize(done);
    report.complete = false;
    report.failure = failure;
    fit_report(report);
    throw SweepAborted(report, failure);
  }
  fit_report(report);
  return report;
}

bool omega_spec_zero(const FieldSpec& s) {
  if (s.mean != 0.0) return false;
  return std::all_of(s.modes.begin(), s.modes.end(), [](const ModeSpec& m) { return m.amplitude == 0.0; });
}

}  // namespace

SweepReport etar_sweep(const SimConfig& base_config, const std::vector<double>& etar_values) {
  require_decreasing(etar_values, "etar_sweep");
  for (double v : etar_values)
    if (!(v > 0.0))
      throw ValidationError("etar_sweep: eta_r values must be positive (eta_r = 0 is the decoupling identity)");
  const SimConfig base = sweep_base(base_config);
  base.validate();
  if (base.initial_condition.kind == InitialKind::FromSnapshot) {
    const State s0 = make_initial_state(base, make_grid(base.grid.n, base.grid.box_length));
    if (s0.omega.max_abs() != 0.0) throw ValidationError("etar_sweep: requires omega^0 = 0");
  } else if (!omega_spec_zero(base.initial_condition.omega)) {
    throw ValidationError("etar_sweep: requires omega^0 = 0");
  }

  SimConfig ref = base;
  ref.params.variant = Variant::AGG;
  const std::vector<State> reference = record_trajectory(ref);

  SweepReport report;
  report.parameter = "eta_r";
  report.parameter_values = etar_values;
  report.fit_abscissa = etar_values;
  std::vector<SimConfig> configs;
  for (double v : etar_values) {
    SimConfig c = base;
    c.params.variant = Variant::MAGG;
    c.params.eta_r = {v, v};
    configs.push_back(c);
  }
  return run_sweep(std::move(report), configs, reference);
}

SweepReport modelh_sweep(const SimConfig& base_config, const std::vector<double>& mismatch_values) {
  require_decreasing(mismatch_values, "modelh_sweep");
  const SimConfig base = sweep_base(base_config);
  base.validate();
  const double rho_bar = base.params.rho_bar;
  for (double v : mismatch_values)
    if (!(v >= 0.0) || !(v < 2.0 * rho_bar))
      throw ValidationError("modelh_sweep: mismatch values must lie in [0, 2 rho_bar)");
  const PhasePair eta_r = base.params.eta_r;
  if (eta_r.phase1 != eta_r.phase2) throw ValidationError("modelh_sweep: eta_r must be constant");

  SimConfig ref = base;
  ref.params.variant = Variant::ModelH;
  const std::vector<State> reference = record_trajectory(ref);

  SweepReport report;
  report.parameter = "density_mismatch";
  report.parameter_values = mismatch_values;
  std::vector<SimConfig> configs;
  for (double v : mismatch_values) {
    SimConfig c = base;
    c.params.variant = Variant::MAGG;
    c.params.rho1 = rho_bar + 0.5 * v;
    c.params.rho2 = rho_bar - 0.5 * v;
    configs.push_back(c);
    report.fit_abscissa.push_back(eta_r.phase1 + v);
  }
  return run_sweep(std::move(report), configs, reference);
}

EnergyOrderReport energy_order(const SimConfig& base_config, const std::vector<double>& dt_values) {
  require_decreasing(dt_values, "energy_order");
  for (double v : dt_values)
    if (!(v > 0.0)) throw ValidationError("energy_order: dt values must be positive");
  const SimConfig base = sweep_base(base_config);
  base.validate();

  std::vector<std::future<std::pair<double, double>>> jobs;
  for (double dt : dt_values) {
    SimConfig c = base;
    c.dt = dt;
    jobs.push_back(std::async(std::launch::async, [c] {
      const RunResult r = run(c);
      return std::make_pair(r.ledger.max_abs_residual(), r.ledger.records.front().energy.total);
    }));
  }
  EnergyOrderReport report;
  report.dt_values = dt_values;
  double scale = 1.0;
  for (auto& j : jobs) {
    const auto [res, e0] = j.get();
    report.max_residuals.push_back(res);
    scale = std::max(scale, std::abs(e0));
  }
  for (std::size_t i = 0; i + 1 < report.max_residuals.size(); ++i)
    report.ratios.push_back(report.max_residuals[i + 1] > 0.0
                                ? report.max_residuals[i] / report.max_residuals[i + 1]
                                : std::numeric_limits<double>::infinity());
  const double largest = *std::max_element(report.max_residuals.begin(), report.max_residuals.end());
  constexpr double roundoff = 1e-9;
  if (largest <= roundoff * scale || dt_values.size() < 2) {
    report.fit_skipped = true;
  } else {
    bool positive = std::all_of(report.max_residuals.begin(), report.max_residuals.end(),
                                [](double r) { return r > 0.0; });
    if (positive)
      report.fitted_order = fit_loglog(dt_values, report.max_residuals).slope;
    else
      report.fit_skipped = true;
  }
  return report;
}

ConvergenceReport convergence(const SimConfig& base_config, const std::vector<int>& grids) {
  if (grids.size() < 2) throw ValidationError("convergence: at least two grids are required");
  for (std::size_t i = 0; i < grids.size(); ++i) {
    if (grids[i] < 8 || grids[i] % 2 != 0) throw ValidationError("convergence: grid sizes must be even and >= 8");
    if (i > 0 && !(grids[i] > grids[i - 1]))
      throw ValidationError("convergence: grid sizes must be strictly increasing");
  }
  if (base_config.initial_condition.kind == InitialKind::FromSnapshot)
    throw ValidationError("convergence: snapshot initial data is tied to one grid");
  const SimConfig base = sweep_base(base_config);
  base.validate();

  std::vector<std::future<State>> jobs;
  for (int n : grids) {
    SimConfig c = base;
    c.grid.n = n;
    jobs.push_back(std::async(std::launch::async, [c] { return run(c).final_state; }));
  }
  std::vector<State> finals;
  for (auto& j : jobs) finals.push_back(j.get());

  const State& fine = finals.back();
  const GridPtr target = fine.grid_ptr();
  ConvergenceReport report;
  report.grids = grids;
  for (const State& s : finals) {
    const double du = sobolev_norm_sq(VecField{resample(s.u.x, target), resample(s.u.y, target)} - fine.u, 0);
    const double dw = sobolev_norm_sq(resample(s.omega, target) - fine.omega, 0);
    const double dp = sobolev_norm_sq(resample(s.phi, target) - fine.phi, 0);
    report.errors.push_back(std::sqrt(du + dw + dp));
  }
  return report;
}

}  // namespace magg
