#pragma once

// Constitutive laws and energy functionals of the micropolar two-phase model
// and its nonpolar (AGG) and matched-density (Model H) reductions.

#include <optional>
#include <string>
#include <vector>

#include "magg/spectral.hpp"

namespace magg {

enum class Potential { Quartic, Logarithmic };
enum class Variant { MAGG, AGG, ModelH };

/// Phase-wise constants (f1 in fluid 1 at phi = 1, f2 in fluid 2 at phi = -1)
/// with the affine interpolation f(phi) = (f1 - f2)/2 phi + (f1 + f2)/2,
/// extended linearly outside [-1, 1].
struct PhasePair {
  double phase1 = 0.0;
  double phase2 = 0.0;

  double at(double phi) const noexcept { return slope() * phi + 0.5 * (phase1 + phase2); }
  double slope() const noexcept { return 0.5 * (phase1 - phase2); }
  double min() const noexcept { return phase1 < phase2 ? phase1 : phase2; }
  double max() const noexcept { return phase1 < phase2 ? phase2 : phase1; }
  bool operator==(const PhasePair&) const = default;
};

struct ModelParams {
  double sigma = 1.0;
  double eps = 0.25;
  double rho1 = 1.0;
  double rho2 = 1.0;
  PhasePair eta{0.1, 0.1};
  PhasePair eta_r{0.0, 0.0};
  // c0 only enters the three-dimensional micro-rotation balance; it is
  // validated and carried but has no role in the planar dynamics.
  PhasePair c0{0.1, 0.1};
  PhasePair cd{0.1, 0.1};
  PhasePair ca{0.05, 0.05};
  double theta = 1.0;
  double theta0 = 2.0;
  Potential potential = Potential::Quartic;
  double alpha = 0.0;
  Variant variant = Variant::MAGG;
  double rho_bar = 1.0;  // Model H reference density
  std::optional<double> stabilization;  // unset: default rule below
  double delta_floor = 1e-9;

  /// Throws ConfigError for violated invariants; returns soft warnings
  /// (the viscosity ordering assumptions only matter for the existence theory).
  std::vector<std::string> validate() const;

  /// S = (sigma/eps) * max(1, theta0) for the logarithmic potential and
  /// sigma/eps for the quartic one, unless overridden.
  double stabilization_constant() const;

  PhasePair density() const { return {rho1, rho2}; }
  bool operator==(const ModelParams&) const = default;
};

/// Parameters the dynamics actually see: AGG drops eta_r, Model H additionally
/// replaces both densities with rho_bar.
ModelParams effective_params(const ModelParams& params);

struct State {
  double time = 0.0;
  VecField u;
  Field omega;
  Field phi;
  Field mu;  // derived from phi
  Field p;   // diagnostic, mean zero

  const GridPtr& grid_ptr() const { return phi.grid_ptr(); }
  const SpectralGrid& grid() const { return phi.grid(); }
};

/// Builds a state with mu recomputed from phi and a zero pressure.
State make_state(double time, VecField u, Field omega, Field phi, const ModelParams& params,
                 DealiasRule rule = DealiasRule::TwoThirds);

struct EnergyBreakdown {
  double kinetic_u = 0.0;
  double kinetic_omega = 0.0;
  double gradient = 0.0;
  double potential = 0.0;
  double total = 0.0;
};

struct DissipationBreakdown {
  double mu_grad = 0.0;
  double viscous_sym = 0.0;
  double rotational_coupling = 0.0;
  double omega_diffusion = 0.0;
  double total = 0.0;
};

Field rho_of_phi(const Field& phi, const ModelParams& params);
Field coeff_of_phi(const PhasePair& pair, const Field& phi);

double potential_value(double s, const ModelParams& params);
double potential_deriv(double s, const ModelParams& params);
double potential_second(double s, const ModelParams& params);

/// Pointwise F'(phi) in real space (not dealiased). SeparationViolation
/// reports the first offending grid index.
Field potential_deriv(const Field& phi, const ModelParams& params);

/// Throws SeparationViolation when the logarithmic potential is active and
/// some |phi| >= 1 - delta_floor. No-op for the quartic potential.
void check_separation(const Field& phi, const ModelParams& params);

/// Throws PositivityLoss when rho, eta or c_d + c_a fails to be positive, or
/// eta_r turns negative, anywhere on the grid.
void check_positivity(const Field& phi, const ModelParams& params);

/// mu = sigma eps (-Lap phi) + (sigma/eps) dealias(F'(phi)).
Field chemical_potential(const Field& phi, const ModelParams& params, DealiasRule rule = DealiasRule::TwoThirds);

/// dealias(mu grad phi).
VecField capillary_force(const Field& phi, const Field& mu, DealiasRule rule = DealiasRule::TwoThirds);

EnergyBreakdown total_energy(const State& state, const ModelParams& params);
DissipationBreakdown dissipation(const State& state, const ModelParams& params);

}  // namespace magg
