#pragma once

// Convective Cahn-Hilliard sub-step and the initial-data truncation and
// mollification pipeline.

#include <utility>

#include "magg/model.hpp"
#include "magg/spectral.hpp"

namespace magg {

struct ChStepOptions {
  double dt = 1e-3;
  double alpha = 0.0;          // viscous Cahn-Hilliard damping
  double stabilization = 0.0;  // linear stabilization S
  DealiasRule dealias_rule = DealiasRule::TwoThirds;

  /// Options with alpha and S taken from the model parameters.
  static ChStepOptions from_params(double dt, const ModelParams& params,
                                   DealiasRule rule = DealiasRule::TwoThirds);
};

struct ChStepResult {
  Field phi;
  Field mu;  // the scheme's chemical potential mu*
};

/// One linearly implicit, stabilized step of
///   phi_t + u . grad phi = Lap mu*,
///   mu* = sigma eps (-Lap phi^{n+1}) + (sigma/eps) F'(phi^n)
///         + S (phi^{n+1} - phi^n) + alpha (phi^{n+1} - phi^n) / dt,
/// solved mode by mode. The mean of phi is conserved exactly.
/// Throws CflViolation when dt max|u| exceeds the grid spacing and
/// SeparationViolation when the logarithmic potential domain is left.
ChStepResult ch_step(const Field& phi, const VecField& u, const ChStepOptions& opts, const ModelParams& params);

/// Discrete Ginzburg-Landau energy  int sigma eps/2 |grad phi|^2 + sigma/eps F(phi).
double ginzburg_landau_energy(const Field& phi, const ModelParams& params);

/// Pointwise clamp to [-k, k].
Field truncate_mu(const Field& mu0, double k_level);

struct MollifierOptions {
  int max_iter = 200;
  double tolerance = 1e-10;       // max-norm residual
  double min_damping = 1.0 / 1024;
  int linear_max_iter = 400;
  double linear_tolerance = 1e-13;
};

struct MollifierReport {
  double k_level = 0.0;
  int iterations = 0;
  double residual = 0.0;
  double separation = 0.0;   // 1 - max|phi_{0,k}|
  double mean_drift = 0.0;   // |mean(phi_{0,k}) - mean(phi_0)|
  bool used_picard = false;
};

/// Solves  -Lap phi + F'(phi) = h_k(-Lap phi0 + F'(phi0))  on the torus by
/// damped Newton (matrix-free, spectrally preconditioned GMRES inner solves)
/// with a damped Picard fallback. The discrete problem is collocated on the
/// grid, so the residual is measured pointwise.
std::pair<Field, MollifierReport> mollify_initial_phi(const Field& phi0, double k_level, const ModelParams& params,
                                                      const MollifierOptions& opts = {});

/// Pointwise residual  -Lap phi + F'(phi) - target.
Field mollifier_residual(const Field& phi, const Field& target, const ModelParams& params);

}  // namespace magg
