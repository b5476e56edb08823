#pragma once

// Momentum and micro-rotation sub-steps (IMEX, diagonal implicit solves).
//
// Variable density is handled by a constant-coefficient Leray projection.
// With pressure_iterations > 0 the projection is corrected by a fixed-point
// iteration on the pressure, p <- rho_ref/dt * Q[u* - dt (1/rho - 1/rho_ref) grad p],
// which converges to the variable-density projection for any density ratio
// (contraction factor (rho_max - rho_min)/(rho_max + rho_min)); the final
// velocity is always exactly divergence-free.

#include <optional>

#include "magg/model.hpp"
#include "magg/spectral.hpp"

namespace magg {

struct FlowStepOptions {
  double dt = 1e-3;
  double implicit_viscosity = 0.0;        // nu_bar
  double implicit_omega_diffusion = 0.0;  // c_bar
  int pressure_iterations = 0;
  DealiasRule dealias_rule = DealiasRule::TwoThirds;

  /// nu_bar = min(eta_i) / max(rho_i) and c_bar = min_i(c_d + c_a) / max(rho_i)
  /// unless overridden.
  static FlowStepOptions from_params(double dt, const ModelParams& params, int pressure_iterations = 0,
                                     std::optional<double> nu_bar = std::nullopt,
                                     std::optional<double> c_bar = std::nullopt,
                                     DealiasRule rule = DealiasRule::TwoThirds);
};

/// Explicit momentum tendency G (pressure excluded, nu_bar Lap u excluded):
///   G = -(u.grad)u + (1/rho)[div(2 eta Du + 2 eta_r Wu) + 2 curl1(eta_r omega)
///        + rho' (grad mu . grad) u + mu grad phi] - nu_bar Lap u,
/// every product dealiased.
VecField momentum_rhs_explicit(const State& state, const Field& mu, const ModelParams& params,
                               double implicit_viscosity, DealiasRule rule = DealiasRule::TwoThirds);

struct MomentumStepResult {
  VecField u;
  Field p;
  int pressure_iterations_used = 0;
};

MomentumStepResult momentum_step(const State& state, const Field& mu, const FlowStepOptions& opts,
                                 const ModelParams& params);

/// (i) (1 + dt c_bar |k|^2) w* = w^n + dt H, with
///     H = -(u^{n+1}.grad) w^n + (1/rho)[div((c_d + c_a) grad w^n) + 2 eta_r curl2 u^{n+1}
///         + rho' grad mu . grad w^n] - c_bar Lap w^n;
/// (ii) w^{n+1} = w* / (1 + 4 dt eta_r / rho) pointwise.
Field microrotation_step(const State& state, const VecField& u_next, const Field& mu, const FlowStepOptions& opts,
                         const ModelParams& params);

/// ||div u||_2 / ||u||_2 (zero for a zero field).
double divergence_residual(const VecField& u);

}  // namespace magg
