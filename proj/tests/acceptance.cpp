// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "magg/cahn_hilliard.hpp"
#include "magg/diagnostics.hpp"
#include "magg/hydrodynamics.hpp"
#include "magg/io.hpp"
#include "oracles/ch_reference.hpp"

namespace {

using namespace magg;
namespace fs = std::filesystem;
constexpr double pi = std::numbers::pi;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

SimConfig config(const std::string& name) { return load_config(fs::path(MAGG_CONFIG_DIR) / name); }

bool bit_equal(const Field& a, const Field& b) {
  const auto x = a.values();
  const auto y = b.values();
  return std::equal(x.begin(), x.end(), y.begin(), y.end());
}

double state_gap(const State& a, const State& b) {
  return std::max({(a.phi - b.phi).max_abs(), max_norm(a.u - b.u), (a.omega - b.omega).max_abs()});
}

Verdict mass_conservation() {
  const SimConfig c = config("demo_quartic.json");
  const RunResult r = run(c);
  const double area = c.grid.box_length * c.grid.box_length;
  const double m0 = r.ledger.records.front().mass / area;
  double drift = 0.0;
  for (const auto& rec : r.ledger.records) drift = std::max(drift, std::abs(rec.mass / area - m0));
  drift = std::max(drift, std::abs(r.final_state.phi.mean() - m0));
  return {r.steps >= 2000 && drift <= 1e-12, fmt("steps %.0f, max |mean(phi) - mean(phi0)| = %.3g", r.steps, drift)};
}

Verdict energy_law_order() {
  const EnergyOrderReport r = energy_order(config("energy_order.json"), {2e-3, 1e-3, 5e-4});
  bool ok = r.ratios.size() == 2;
  for (double q : r.ratios) ok = ok && q >= 1.6 && q <= 2.4;
  return {ok, fmt("ratios %.4f, %.4f", r.ratios.at(0), r.ratios.at(1))};
}

Verdict nonpolar_decoupling() {
  SimConfig agg = config("etar_sweep.json");
  agg.params.variant = Variant::AGG;
  SimConfig magg = config("etar_sweep.json");
  magg.params.eta_r = {0.0, 0.0};
  std::vector<State> reference;
  run(agg, [&](const State& s, int) { reference.push_back(s); });
  DiffAccumulator acc;
  std::size_t k = 0;
  bool aligned = true;
  run(magg, [&](const State& s, int) {
    if (k >= reference.size()) {
      aligned = false;
      return;
    }
    acc.add(s, reference[k++]);
  });
  aligned = aligned && k == reference.size();
  const double e = acc.finalize().combined;
  return {aligned && e <= 1e-14, fmt("combined sup difference %.3g over %.0f samples", e, double(k))};
}

Verdict etar_rate() {
  const SweepReport r = etar_sweep(config("etar_sweep.json"), {1e-1, 1e-2, 1e-3, 1e-4});
  const bool ok = r.complete && r.fitted_slope && r.fit_r2 && *r.fitted_slope >= 0.9 && *r.fit_r2 >= 0.98;
  return {ok, fmt("slope %.4f, R^2 %.6f", r.fitted_slope.value_or(NAN), r.fit_r2.value_or(NAN))};
}

Verdict modelh_rate() {
  const SimConfig c = config("modelh_sweep.json");
  const SweepReport r = modelh_sweep(c, {0.2, 0.1, 0.05, 0.025});
  SimConfig collapse = c;
  collapse.params.eta_r = {0.0, 0.0};
  const SweepReport z = modelh_sweep(collapse, {0.0});
  const bool ok = r.complete && r.fitted_slope && *r.fitted_slope >= 0.9 && z.errors.at(0) <= 1e-14;
  return {ok, fmt("slope %.4f, R^2 %.6f, collapse error %.3g", r.fitted_slope.value_or(NAN),
                  r.fit_r2.value_or(NAN), z.errors.at(0))};
}

Verdict strict_separation() {
  const SimConfig c = config("demo_log.json");
  const RunResult r = run(c);
  const double phi0 = 1.0 - r.ledger.records.front().separation;
  double margin = 1.0;
  for (const auto& rec : r.ledger.records) margin = std::min(margin, rec.separation);
  const bool done = std::abs(r.final_state.time - c.t_end) <= 1e-12;
  return {done && phi0 <= 0.9 && margin >= 1e-4,
          fmt("max|phi0| %.3f, min margin %.4g, reached t = %.3g", phi0, margin, r.final_state.time)};
}

Verdict rk4_oracle() {
  const int n = 16;
  auto g = make_grid(n, 2 * pi);
  oracle::DenseFourier dense(n, 2 * pi);
  ModelParams p;
  const auto phi_fn = [](double x, double y) { return 0.1 + 0.2 * std::sin(x) * std::cos(y); };
  const auto ux_fn = [](double, double y) { return 0.5 * std::sin(y); };
  const auto uy_fn = [](double x, double) { return 0.4 * std::cos(x); };
  const double dt = 1e-4;
  const auto r = ch_step(Field::from_function(g, phi_fn),
                         VecField{Field::from_function(g, ux_fn), Field::from_function(g, uy_fn)},
                         ChStepOptions::from_params(dt, p), p);
  const oracle::ChReference ref(dense, p.sigma, p.eps);
  const oracle::Vec phi_ref =
      ref.integrate(dense.sample(phi_fn), dense.sample(ux_fn), dense.sample(uy_fn), dt, 1e-7);
  double diff = 0.0;
  for (std::size_t q = 0; q < phi_ref.size(); ++q) diff = std::max(diff, std::abs(r.phi.values()[q] - phi_ref[q]));
  const double rel = diff / oracle::max_abs(phi_ref);
  return {rel <= 1e-6, fmt("relative max-norm gap %.3g", rel)};
}

Verdict self_convergence() {
  const ConvergenceReport r = convergence(config("smooth_convergence.json"), {32, 64, 128});
  const bool ok = r.errors.at(1) <= r.errors.at(0) / 10.0;
  return {ok, fmt("error(32) %.3g, error(64) %.3g", r.errors.at(0), r.errors.at(1))};
}

Verdict taylor_green() {
  auto g = make_grid(64, 2 * pi);
  ModelParams p;
  p.eta = {0.1, 0.1};
  const double dt = 1e-2;
  const VecField u{Field::from_function(g, [](double x, double y) { return std::sin(x) * std::cos(y); }),
                   Field::from_function(g, [](double x, double y) { return -std::cos(x) * std::sin(y); })};
  const State s = make_state(0.0, u, Field(g), Field(g), p);
  const auto opts = FlowStepOptions::from_params(dt, p);
  const auto r = momentum_step(s, s.mu, opts, p);
  const double factor = 1.0 / (1.0 + 2.0 * opts.implicit_viscosity * dt);
  const double err = max_norm(r.u - factor * u);
  const double div = divergence_residual(r.u);
  return {err <= 1e-12 && div <= 1e-13, fmt("factor error %.3g, divergence %.3g", err, div)};
}

Verdict determinism_and_persistence() {
  SimConfig c = config("etar_sweep.json");
  c.params.eta_r = {0.05, 0.05};
  c.t_end = 0.02;
  c.fixed_dt = true;
  const RunResult a = run(c);
  const RunResult b = run(c);
  const bool same = ledger_csv(a.ledger) == ledger_csv(b.ledger) &&
                    encode_snapshot(a.final_state) == encode_snapshot(b.final_state);

  const State& s = a.final_state;
  const SnapshotData d = decode_snapshot(encode_snapshot(s));
  bool round_trip = d.time == s.time && d.fields.size() == 4;
  const Field* fields[] = {&s.phi, &s.u.x, &s.u.y, &s.omega};
  for (std::size_t f = 0; round_trip && f < 4; ++f) {
    const auto v = fields[f]->values();
    round_trip = std::equal(v.begin(), v.end(), d.fields[f].second.begin(), d.fields[f].second.end());
  }

  // 10 steps straight versus 5 + restart from the written snapshot + 5.
  const fs::path dir = fs::temp_directory_path() / "magg_acceptance_restart";
  fs::remove_all(dir);
  SimConfig whole = c;
  whole.t_end = 10 * c.dt;
  const RunResult w = run(whole);
  SimConfig first = whole;
  first.t_end = 5 * c.dt;
  first.output.directory = dir.string();
  run(first);
  const State mid = read_snapshot(dir / "snapshot_final.bin", c.params);
  const RunResult second = run_from(whole, mid);
  const double gap = state_gap(second.final_state, w.final_state);
  fs::remove_all(dir);
  const bool ok = same && round_trip && gap <= 1e-14 && bit_equal(a.final_state.phi, b.final_state.phi);
  return {ok, fmt("identical reruns %.0f, bit-exact round trip %.0f, restart gap %.3g", same, round_trip, gap)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Verdict()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "mass conservation", 60, mass_conservation},
      {2, "energy-law order", 180, energy_law_order},
      {3, "nonpolar decoupling identity", 60, nonpolar_decoupling},
      {4, "eta_r consistency rate", 600, etar_rate},
      {5, "Model H consistency rate", 600, modelh_rate},
      {6, "strict separation", 120, strict_separation},
      {7, "RK4 oracle equivalence", 10, rk4_oracle},
      {8, "spectral self-convergence", 300, self_convergence},
      {9, "Taylor-Green amplification", 1, taylor_green},
      {10, "determinism and persistence", 60, determinism_and_persistence},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = v.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s  criterion %2d  %-30s %s; %.2f s (budget %.0f s)\n", pass ? "PASS" : "FAIL", c.id, c.name,
                v.detail.c_str(), secs, c.budget_s);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
