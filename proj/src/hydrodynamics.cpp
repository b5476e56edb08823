#include "magg/hydrodynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "magg/errors.hpp"

namespace magg {

FlowStepOptions FlowStepOptions::from_params(double dt, const ModelParams& params, int pressure_iterations,
                                             std::optional<double> nu_bar, std::optional<double> c_bar,
                                             DealiasRule rule) {
  const ModelParams eff = effective_params(params);
  const double rho_max = std::max(eff.rho1, eff.rho2);
  FlowStepOptions o;
  o.dt = dt;
  o.implicit_viscosity = nu_bar.value_or(eff.eta.min() / rho_max);
  o.implicit_omega_diffusion =
      c_bar.value_or(std::min(eff.cd.phase1 + eff.ca.phase1, eff.cd.phase2 + eff.ca.phase2) / rho_max);
  o.pressure_iterations = pressure_iterations;
  o.dealias_rule = rule;
  return o;
}

namespace {

Field reciprocal(const Field& f) {
  return map_values(f, [](double x) { return 1.0 / x; });
}

// Per-mode implicit solve (1 + dt c |k|^2) out = in.
Field implicit_diffusion(const Field& in, double dt, double c) {
  const auto& g = in.grid();
  auto src = in.coeffs();
  std::vector<Complex> out(src.size());
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n_half(); ++i) {
      const std::size_t q = static_cast<std::size_t>(j) * g.n_half() + i;
      out[q] = src[q] / (1.0 + dt * c * g.k_squared(i, j));
    }
  return Field::from_coeffs(in.grid_ptr(), std::move(out));
}

void require_finite(const VecField& v, const char* what) {
  if (!v.x.is_finite() || !v.y.is_finite()) throw NonFiniteError(std::string(what) + " is not finite");
}

}  // namespace

VecField momentum_rhs_explicit(const State& state, const Field& mu, const ModelParams& params,
                               double implicit_viscosity, DealiasRule rule) {
  const ModelParams eff = effective_params(params);
  check_positivity(state.phi, params);
  require_finite(state.u, "velocity");

  const Field inv_rho = reciprocal(rho_of_phi(state.phi, params));
  const Field eta = coeff_of_phi(eff.eta, state.phi);
  const Field eta_r = coeff_of_phi(eff.eta_r, state.phi);
  const double drho = eff.density().slope();

  const Field ux_x = derivative(state.u.x, Axis::X);
  const Field ux_y = derivative(state.u.x, Axis::Y);
  const Field uy_x = derivative(state.u.y, Axis::X);
  const Field uy_y = derivative(state.u.y, Axis::Y);

  // Stress 2 eta Du + 2 eta_r Wu, with (Wu)_xy = curl2(u)/2 = -(Wu)_yx.
  const Field t_xx = 2.0 * dealias(multiply(eta, ux_x), rule);
  const Field t_yy = 2.0 * dealias(multiply(eta, uy_y), rule);
  const Field shear = dealias(multiply(eta, ux_y + uy_x), rule);
  const Field spin = dealias(multiply(eta_r, uy_x - ux_y), rule);
  const Field t_xy = shear + spin;
  const Field t_yx = shear - spin;
  VecField force{derivative(t_xx, Axis::X) + derivative(t_yx, Axis::Y),
                 derivative(t_xy, Axis::X) + derivative(t_yy, Axis::Y)};

  force += 2.0 * curl1(dealias(multiply(eta_r, state.omega), rule));

  const VecField gmu = gradient(mu);
  force += drho * VecField{dealias(multiply(gmu.x, ux_x) + multiply(gmu.y, ux_y), rule),
                           dealias(multiply(gmu.x, uy_x) + multiply(gmu.y, uy_y), rule)};

  force += capillary_force(state.phi, mu, rule);

  VecField g{dealias(multiply(inv_rho, force.x), rule), dealias(multiply(inv_rho, force.y), rule)};
  g -= VecField{dealias(multiply(state.u.x, ux_x) + multiply(state.u.y, ux_y), rule),
                dealias(multiply(state.u.x, uy_x) + multiply(state.u.y, uy_y), rule)};
  g -= implicit_viscosity * VecField{laplacian(state.u.x), laplacian(state.u.y)};
  return g;
}

MomentumStepResult momentum_step(const State& state, const Field& mu, const FlowStepOptions& opts,
                                 const ModelParams& params) {
  if (!(opts.dt > 0.0)) throw ValidationError("momentum_step: dt must be positive");
  if (opts.pressure_iterations < 0) throw ValidationError("momentum_step: pressure_iterations must be >= 0");
  const auto& grid = state.grid();
  const double umax = max_norm(state.u);
  if (opts.dt * umax > grid.spacing())
    throw CflViolation("momentum_step: dt " + std::to_string(opts.dt) + " exceeds the advective limit " +
                       std::to_string(grid.spacing() / umax));

  const VecField g = momentum_rhs_explicit(state, mu, params, opts.implicit_viscosity, opts.dealias_rule);
  VecField rhs = state.u;
  rhs += opts.dt * g;
  const VecField u_star{implicit_diffusion(rhs.x, opts.dt, opts.implicit_viscosity),
                        implicit_diffusion(rhs.y, opts.dt, opts.implicit_viscosity)};

  const Field rho = rho_of_phi(state.phi, params);
  const double rho_min = rho.min();
  const double rho_max = rho.max();
  // Harmonic mean of the extremes minimizes the fixed-point contraction factor.
  const double rho_ref = rho_min == rho_max ? rho_min : 2.0 / (1.0 / rho_min + 1.0 / rho_max);
  const double p_scale = rho_ref / opts.dt;

  MomentumStepResult out;
  VecField w = u_star;
  Field p = p_scale * gradient_potential(u_star);

  const Field corr = map_values(rho, [rho_ref](double r) { return 1.0 / r - 1.0 / rho_ref; });
  const bool uniform = corr.max_abs() == 0.0;
  if (!uniform) {
    for (int it = 0; it < opts.pressure_iterations; ++it) {
      const VecField gp = gradient(p);
      w = u_star - opts.dt * VecField{dealias(multiply(corr, gp.x), opts.dealias_rule),
                                      dealias(multiply(corr, gp.y), opts.dealias_rule)};
      Field p_next = p_scale * gradient_potential(w);
      const double change = (p_next - p).max_abs();
      const double scale = std::max(1.0, p_next.max_abs());
      p = std::move(p_next);
      ++out.pressure_iterations_used;
      if (change <= 1e-13 * scale) break;
    }
  }
  out.u = leray_project(w);
  out.p = std::move(p);
  return out;
}

Field microrotation_step(const State& state, const VecField& u_next, const Field& mu, const FlowStepOptions& opts,
                         const ModelParams& params) {
  if (!(opts.dt > 0.0)) throw ValidationError("microrotation_step: dt must be positive");
  const ModelParams eff = effective_params(params);
  check_positivity(state.phi, params);
  const auto rule = opts.dealias_rule;

  const Field rho = rho_of_phi(state.phi, params);
  const Field inv_rho = reciprocal(rho);
  const Field eta_r = coeff_of_phi(eff.eta_r, state.phi);
  const Field cdca =
      coeff_of_phi(PhasePair{eff.cd.phase1 + eff.ca.phase1, eff.cd.phase2 + eff.ca.phase2}, state.phi);
  const double drho = eff.density().slope();

  const VecField gw = gradient(state.omega);
  Field bracket = divergence(VecField{dealias(multiply(cdca, gw.x), rule), dealias(multiply(cdca, gw.y), rule)});
  bracket += 2.0 * dealias(multiply(eta_r, curl2(u_next)), rule);
  const VecField gmu = gradient(mu);
  bracket += drho * dealias(multiply(gmu.x, gw.x) + multiply(gmu.y, gw.y), rule);

  Field h = dealias(multiply(inv_rho, bracket), rule);
  h -= dealias(multiply(u_next.x, gw.x) + multiply(u_next.y, gw.y), rule);
  h -= opts.implicit_omega_diffusion * laplacian(state.omega);

  Field rhs = state.omega;
  rhs += opts.dt * h;
  const Field w_star = implicit_diffusion(rhs, opts.dt, opts.implicit_omega_diffusion);

  // Pointwise implicit relaxation of the 4 eta_r omega / rho coupling.
  auto ws = w_star.values();
  auto er = eta_r.values();
  auto rv = rho.values();
  std::vector<double> out(ws.size());
  for (std::size_t q = 0; q < ws.size(); ++q) out[q] = ws[q] / (1.0 + 4.0 * opts.dt * er[q] / rv[q]);
  return dealias(Field::from_values(state.omega.grid_ptr(), std::move(out)), rule);
}

double divergence_residual(const VecField& u) {
  const double un = sobolev_norm_sq(u, 0);
  if (un == 0.0) return 0.0;
  return std::sqrt(sobolev_norm_sq(divergence(u), 0) / un);
}

}  // namespace magg
