#include "magg/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "magg/errors.hpp"

namespace magg {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(name, "must be positive and finite");
}

void require_positive(const PhasePair& p, const std::string& name) {
  if (!(p.phase1 > 0.0) || !(p.phase2 > 0.0) || !std::isfinite(p.phase1) || !std::isfinite(p.phase2))
    throw ConfigError(name, "both phase values must be positive and finite");
}

}  // namespace

std::vector<std::string> ModelParams::validate() const {
  require_positive(sigma, "params.sigma");
  require_positive(eps, "params.eps");
  require_positive(rho1, "params.rho1");
  require_positive(rho2, "params.rho2");
  require_positive(eta, "params.eta");
  if (!(eta_r.phase1 >= 0.0) || !(eta_r.phase2 >= 0.0) || !std::isfinite(eta_r.phase1) ||
      !std::isfinite(eta_r.phase2))
    throw ConfigError("params.eta_r", "must be nonnegative and finite");
  require_positive(c0, "params.c0");
  require_positive(cd, "params.cd");
  require_positive(ca, "params.ca");
  if (potential == Potential::Logarithmic) {
    if (!(theta > 0.0) || !(theta < theta0))
      throw ConfigError("params.theta0", "logarithmic potential requires 0 < θ < θ₀ (0 < theta < theta0)");
  }
  if (!(alpha >= 0.0)) throw ConfigError("params.alpha", "must be nonnegative");
  if (stabilization && !(*stabilization >= 0.0)) throw ConfigError("params.stabilization", "must be nonnegative");
  if (!(delta_floor > 0.0 && delta_floor < 0.5)) throw ConfigError("params.delta_floor", "must lie in (0, 0.5)");
  if (variant == Variant::ModelH) require_positive(rho_bar, "params.rho_bar");

  std::vector<std::string> warnings;
  for (int i = 0; i < 2; ++i) {
    const double c0i = i == 0 ? c0.phase1 : c0.phase2;
    const double cdi = i == 0 ? cd.phase1 : cd.phase2;
    const double cai = i == 0 ? ca.phase1 : ca.phase2;
    if (!(cdi >= cai))
      warnings.push_back("phase " + std::to_string(i + 1) + ": c_d >= c_a does not hold");
    if (!(2.0 * c0i + cai > cdi))
      warnings.push_back("phase " + std::to_string(i + 1) + ": 2 c_0 + c_a > c_d does not hold");
  }
  return warnings;
}

double ModelParams::stabilization_constant() const {
  if (stabilization) return *stabilization;
  const double scale = sigma / eps;
  return potential == Potential::Logarithmic ? scale * std::max(1.0, theta0) : scale;
}

ModelParams effective_params(const ModelParams& params) {
  ModelParams eff = params;
  switch (params.variant) {
    case Variant::MAGG:
      break;
    case Variant::AGG:
      eff.eta_r = {0.0, 0.0};
      break;
    case Variant::ModelH:
      eff.eta_r = {0.0, 0.0};
      eff.rho1 = params.rho_bar;
      eff.rho2 = params.rho_bar;
      break;
  }
  return eff;
}

State make_state(double time, VecField u, Field omega, Field phi, const ModelParams& params, DealiasRule rule) {
  State s;
  s.time = time;
  s.mu = chemical_potential(phi, params, rule);
  s.p = Field(phi.grid_ptr());
  s.u = std::move(u);
  s.omega = std::move(omega);
  s.phi = std::move(phi);
  return s;
}

Field coeff_of_phi(const PhasePair& pair, const Field& phi) {
  const double slope = pair.slope();
  const double mid = 0.5 * (pair.phase1 + pair.phase2);
  return map_values(phi, [=](double s) { return slope * s + mid; });
}

Field rho_of_phi(const Field& phi, const ModelParams& params) {
  return coeff_of_phi(effective_params(params).density(), phi);
}

// ---------------------------------------------------------------------------
// Double-well potentials

namespace {

void check_log_domain(double s, const ModelParams& p) {
  if (!(std::abs(s) < 1.0 - p.delta_floor)) throw SeparationViolation(s);
}

}  // namespace

double potential_value(double s, const ModelParams& p) {
  if (p.potential == Potential::Quartic) {
    const double w = s * s - 1.0;
    return 0.25 * w * w;
  }
  check_log_domain(s, p);
  return 0.5 * p.theta * ((1.0 + s) * std::log1p(s) + (1.0 - s) * std::log1p(-s)) - 0.5 * p.theta0 * s * s;
}

double potential_deriv(double s, const ModelParams& p) {
  if (p.potential == Potential::Quartic) return s * s * s - s;
  check_log_domain(s, p);
  return 0.5 * p.theta * (std::log1p(s) - std::log1p(-s)) - p.theta0 * s;
}

double potential_second(double s, const ModelParams& p) {
  if (p.potential == Potential::Quartic) return 3.0 * s * s - 1.0;
  check_log_domain(s, p);
  return p.theta / (1.0 - s * s) - p.theta0;
}

void check_separation(const Field& phi, const ModelParams& params) {
  if (params.potential != Potential::Logarithmic) return;
  auto v = phi.values();
  const double bound = 1.0 - params.delta_floor;
  for (std::size_t q = 0; q < v.size(); ++q)
    if (!(std::abs(v[q]) < bound)) throw SeparationViolation(v[q], q);
}

Field potential_deriv(const Field& phi, const ModelParams& params) {
  check_separation(phi, params);
  return map_values(phi, [&](double s) { return potential_deriv(s, params); });
}

void check_positivity(const Field& phi, const ModelParams& params) {
  const ModelParams eff = effective_params(params);
  const double lo = phi.min();
  const double hi = phi.max();
  // Affine laws attain their extremes at the extremes of phi.
  auto check = [&](const PhasePair& pair, const char* name, bool strict) {
    const double m = std::min(pair.at(lo), pair.at(hi));
    if (strict ? !(m > 0.0) : !(m >= 0.0))
      throw PositivityLoss(std::string(name) + " lost positivity (min " + std::to_string(m) + ")");
  };
  check(eff.density(), "density", true);
  check(eff.eta, "viscosity eta", true);
  check(eff.eta_r, "micro-rotation viscosity eta_r", false);
  check(PhasePair{eff.cd.phase1 + eff.ca.phase1, eff.cd.phase2 + eff.ca.phase2}, "angular viscosity c_d + c_a", true);
}

Field chemical_potential(const Field& phi, const ModelParams& params, DealiasRule rule) {
  const double se = params.sigma * params.eps;
  const double so = params.sigma / params.eps;
  Field mu = dealias(potential_deriv(phi, params), rule);
  mu *= so;
  Field lap = laplacian(phi);
  lap *= -se;
  mu += lap;
  return mu;
}

VecField capillary_force(const Field& phi, const Field& mu, DealiasRule rule) {
  VecField g = gradient(phi);
  return {dealias(multiply(mu, g.x), rule), dealias(multiply(mu, g.y), rule)};
}

// ---------------------------------------------------------------------------
// Energy and dissipation

namespace {

double quadrature(std::span<const double> integrand, const SpectralGrid& g) {
  double s = 0.0;
  for (double x : integrand) s += x;
  return s * g.spacing() * g.spacing();
}

}  // namespace

EnergyBreakdown total_energy(const State& state, const ModelParams& params) {
  const auto& g = state.grid();
  const Field rho = rho_of_phi(state.phi, params);
  auto rv = rho.values();
  auto ux = state.u.x.values();
  auto uy = state.u.y.values();
  auto w = state.omega.values();
  auto ph = state.phi.values();
  const VecField gp = gradient(state.phi);
  auto gx = gp.x.values();
  auto gy = gp.y.values();

  check_separation(state.phi, params);
  const std::size_t size = g.real_size();
  std::vector<double> ku(size), kw(size), gr(size), pot(size);
  for (std::size_t q = 0; q < size; ++q) {
    ku[q] = 0.5 * rv[q] * (ux[q] * ux[q] + uy[q] * uy[q]);
    kw[q] = 0.5 * rv[q] * w[q] * w[q];
    gr[q] = 0.5 * params.sigma * params.eps * (gx[q] * gx[q] + gy[q] * gy[q]);
    pot[q] = params.sigma / params.eps * potential_value(ph[q], params);
  }
  EnergyBreakdown e;
  e.kinetic_u = quadrature(ku, g);
  e.kinetic_omega = quadrature(kw, g);
  e.gradient = quadrature(gr, g);
  e.potential = quadrature(pot, g);
  e.total = e.kinetic_u + e.kinetic_omega + e.gradient + e.potential;
  return e;
}

DissipationBreakdown dissipation(const State& state, const ModelParams& params) {
  const ModelParams eff = effective_params(params);
  const auto& g = state.grid();
  const std::size_t size = g.real_size();

  const VecField gmu = gradient(state.mu);
  const Field dxu = derivative(state.u.x, Axis::X);
  const Field dyu = derivative(state.u.x, Axis::Y);
  const Field dxv = derivative(state.u.y, Axis::X);
  const Field dyv = derivative(state.u.y, Axis::Y);
  const VecField gw = gradient(state.omega);
  const Field eta = coeff_of_phi(eff.eta, state.phi);
  const Field eta_r = coeff_of_phi(eff.eta_r, state.phi);
  const Field cdca = coeff_of_phi(PhasePair{eff.cd.phase1 + eff.ca.phase1, eff.cd.phase2 + eff.ca.phase2}, state.phi);

  auto mx = gmu.x.values(), my = gmu.y.values();
  auto a = dxu.values(), b = dyu.values(), c = dxv.values(), d = dyv.values();
  auto wx = gw.x.values(), wy = gw.y.values();
  auto w = state.omega.values();
  auto ev = eta.values(), erv = eta_r.values(), cv = cdca.values();

  std::vector<double> i_mu(size), i_visc(size), i_rot(size), i_om(size);
  for (std::size_t q = 0; q < size; ++q) {
    i_mu[q] = mx[q] * mx[q] + my[q] * my[q];
    const double shear = 0.5 * (b[q] + c[q]);
    const double du2 = a[q] * a[q] + d[q] * d[q] + 2.0 * shear * shear;
    i_visc[q] = 2.0 * ev[q] * du2;
    const double rel = 0.5 * (c[q] - b[q]) - w[q];
    i_rot[q] = 4.0 * erv[q] * rel * rel;
    i_om[q] = cv[q] * (wx[q] * wx[q] + wy[q] * wy[q]);
  }
  DissipationBreakdown out;
  out.mu_grad = quadrature(i_mu, g);
  out.viscous_sym = quadrature(i_visc, g);
  out.rotational_coupling = quadrature(i_rot, g);
  out.omega_diffusion = quadrature(i_om, g);
  out.total = out.mu_grad + out.viscous_sym + out.rotational_coupling + out.omega_diffusion;
  return out;
}

}  // namespace magg
