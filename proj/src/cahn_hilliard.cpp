#include "magg/cahn_hilliard.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "magg/errors.hpp"

namespace magg {

ChStepOptions ChStepOptions::from_params(double dt, const ModelParams& params, DealiasRule rule) {
  ChStepOptions o;
  o.dt = dt;
  o.alpha = params.alpha;
  o.stabilization = params.stabilization_constant();
  o.dealias_rule = rule;
  return o;
}

ChStepResult ch_step(const Field& phi, const VecField& u, const ChStepOptions& opts, const ModelParams& params) {
  if (!(opts.dt > 0.0)) throw ValidationError("ch_step: dt must be positive");
  if (!(opts.stabilization >= 0.0) || !(opts.alpha >= 0.0))
    throw ValidationError("ch_step: stabilization and alpha must be nonnegative");
  const auto& g = phi.grid();
  const double umax = max_norm(u);
  if (!std::isfinite(umax)) throw NonFiniteError("ch_step: velocity is not finite");
  if (opts.dt * umax > g.spacing())
    throw CflViolation("ch_step: dt " + std::to_string(opts.dt) + " exceeds the advective limit " +
                       std::to_string(g.spacing() / umax));

  const double se = params.sigma * params.eps;
  const double so = params.sigma / params.eps;
  const double relax = opts.stabilization + opts.alpha / opts.dt;

  const Field nonlin = dealias(potential_deriv(phi, params), opts.dealias_rule);
  const VecField gphi = gradient(phi);
  Field adv = dealias(multiply(u.x, gphi.x) + multiply(u.y, gphi.y), opts.dealias_rule);
  adv.mutable_coeffs()[0] = 0.0;

  auto ph = phi.coeffs();
  auto nl = nonlin.coeffs();
  auto ad = adv.coeffs();
  std::vector<Complex> next(ph.size());
  std::vector<Complex> mu(ph.size());
  const double dt = opts.dt;
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n_half(); ++i) {
      const std::size_t q = static_cast<std::size_t>(j) * g.n_half() + i;
      const double k2 = g.k_squared(i, j);
      const double denom = 1.0 + dt * k2 * relax + dt * se * k2 * k2;
      next[q] = (ph[q] * (1.0 + dt * k2 * relax) - dt * ad[q] - dt * k2 * so * nl[q]) / denom;
      mu[q] = se * k2 * next[q] + so * nl[q] + relax * (next[q] - ph[q]);
    }
  ChStepResult out{Field::from_coeffs(phi.grid_ptr(), std::move(next)), Field::from_coeffs(phi.grid_ptr(), std::move(mu))};
  check_separation(out.phi, params);
  return out;
}

double ginzburg_landau_energy(const Field& phi, const ModelParams& params) {
  const VecField gp = gradient(phi);
  auto gx = gp.x.values();
  auto gy = gp.y.values();
  auto v = phi.values();
  double s = 0.0;
  for (std::size_t q = 0; q < v.size(); ++q)
    s += 0.5 * params.sigma * params.eps * (gx[q] * gx[q] + gy[q] * gy[q]) +
         params.sigma / params.eps * potential_value(v[q], params);
  const double h = phi.grid().spacing();
  return s * h * h;
}

Field truncate_mu(const Field& mu0, double k_level) {
  if (!(k_level > 0.0)) throw ValidationError("truncate_mu: k_level must be positive");
  return map_values(mu0, [k_level](double z) { return std::clamp(z, -k_level, k_level); });
}

// ---------------------------------------------------------------------------
// Mollifier

namespace {

using Vec = std::vector<double>;
using LinearOp = std::function<Vec(const Vec&)>;

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t q = 0; q < a.size(); ++q) s += a[q] * b[q];
  return s;
}

double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

// Restarted GMRES with right preconditioning; returns the approximate solution.
Vec gmres(const LinearOp& apply, const LinearOp& precond, const Vec& rhs, double rtol, int max_iter, int restart = 40) {
  const std::size_t size = rhs.size();
  Vec x(size, 0.0);
  const double bnorm = norm2(rhs);
  if (bnorm == 0.0) return x;
  int total = 0;
  while (total < max_iter) {
    Vec r = rhs;
    const Vec ax = apply(x);
    for (std::size_t q = 0; q < size; ++q) r[q] -= ax[q];
    const double beta = norm2(r);
    if (beta <= rtol * bnorm) break;

    std::vector<Vec> v(1, r);
    for (auto& e : v[0]) e /= beta;
    std::vector<Vec> z;
    std::vector<std::vector<double>> h;
    std::vector<double> cs, sn, gvec{beta};
    int m = 0;
    for (; m < restart && total < max_iter; ++m, ++total) {
      z.push_back(precond(v[m]));
      Vec w = apply(z[m]);
      std::vector<double> col(m + 2, 0.0);
      for (int i = 0; i <= m; ++i) {
        col[i] = dot(w, v[i]);
        for (std::size_t q = 0; q < size; ++q) w[q] -= col[i] * v[i][q];
      }
      const double wnorm = norm2(w);
      col[m + 1] = wnorm;
      for (int i = 0; i < m; ++i) {
        const double t = cs[i] * col[i] + sn[i] * col[i + 1];
        col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
        col[i] = t;
      }
      const double denom = std::hypot(col[m], col[m + 1]);
      cs.push_back(denom == 0.0 ? 1.0 : col[m] / denom);
      sn.push_back(denom == 0.0 ? 0.0 : col[m + 1] / denom);
      gvec.push_back(-sn[m] * gvec[m]);
      gvec[m] = cs[m] * gvec[m];
      col[m] = denom;
      col[m + 1] = 0.0;
      h.push_back(col);
      const bool done = std::abs(gvec[m + 1]) <= rtol * bnorm;
      if (!done && wnorm != 0.0) {
        for (auto& e : w) e /= (wnorm == 0.0 ? 1.0 : wnorm);
        v.push_back(std::move(w));
      }
      if (done || wnorm == 0.0) {
        ++m;
        ++total;
        break;
      }
    }
    // Back substitution on the upper-triangular Hessenberg factor.
    std::vector<double> y(m, 0.0);
    for (int i = m - 1; i >= 0; --i) {
      double s = gvec[i];
      for (int k = i + 1; k < m; ++k) s -= h[k][i] * y[k];
      y[i] = s / h[i][i];
    }
    for (int i = 0; i < m; ++i)
      for (std::size_t q = 0; q < size; ++q) x[q] += y[i] * z[i][q];
    if (std::abs(gvec[m]) <= rtol * bnorm) break;
  }
  return x;
}

bool inside_log_domain(std::span<const double> v, const ModelParams& p) {
  if (p.potential != Potential::Logarithmic) return true;
  const double bound = 1.0 - p.delta_floor;
  return std::all_of(v.begin(), v.end(), [bound](double s) { return std::abs(s) < bound; });
}

}  // namespace

Field mollifier_residual(const Field& phi, const Field& target, const ModelParams& params) {
  const Field neg_lap = -laplacian(phi);
  auto l = neg_lap.values();
  auto v = phi.values();
  auto t = target.values();
  check_separation(phi, params);
  std::vector<double> r(v.size());
  for (std::size_t q = 0; q < v.size(); ++q) r[q] = l[q] + potential_deriv(v[q], params) - t[q];
  return Field::from_values(phi.grid_ptr(), std::move(r));
}

std::pair<Field, MollifierReport> mollify_initial_phi(const Field& phi0, double k_level, const ModelParams& params,
                                                      const MollifierOptions& opts) {
  if (!(k_level > 0.0)) throw ValidationError("mollify_initial_phi: k_level must be positive");
  check_separation(phi0, params);
  const auto grid = phi0.grid_ptr();

  // Collocated data  mu0 = -Lap phi0 + F'(phi0), then truncated.
  const Field zero(grid);
  const Field mu0 = mollifier_residual(phi0, zero, params);
  const Field target = truncate_mu(mu0, k_level);

  MollifierReport report;
  report.k_level = k_level;

  Field phi = Field::from_values(grid, std::vector<double>(phi0.values().begin(), phi0.values().end()));
  Field res = mollifier_residual(phi, target, params);
  double rnorm = res.max_abs();

  auto precond_shift = [&](const Field& f) {
    // Diagonal spectral preconditioner -Lap + c, with c from the concavity
    // bound of F (theta0 for the logarithmic potential, 1 for the quartic).
    double lo = 0.0;
    bool first = true;
    for (double s : f.values()) {
      const double f2 = potential_second(s, params);
      lo = first ? f2 : std::min(lo, f2);
      first = false;
    }
    const double bound = params.potential == Potential::Logarithmic ? params.theta0 : 1.0;
    return std::max(1.0, lo + bound);
  };

  while (rnorm > opts.tolerance && report.iterations < opts.max_iter) {
    auto pv = phi.values();
    std::vector<double> f2(pv.size());
    for (std::size_t q = 0; q < pv.size(); ++q) f2[q] = potential_second(pv[q], params);
    const double c = precond_shift(phi);

    LinearOp jac = [&](const Vec& x) {
      const Field xf = Field::from_values(grid, x);
      const Field neg_lap = -laplacian(xf);
      auto l = neg_lap.values();
      Vec out(x.size());
      for (std::size_t q = 0; q < x.size(); ++q) out[q] = l[q] + f2[q] * x[q];
      return out;
    };
    LinearOp prec = [&](const Vec& x) {
      const Field sol = inverse_helmholtz(Field::from_values(grid, x), c, 1.0, 1);
      auto s = sol.values();
      return Vec(s.begin(), s.end());
    };
    Vec rhs(res.values().begin(), res.values().end());
    for (auto& e : rhs) e = -e;
    const Vec delta = gmres(jac, prec, rhs, opts.linear_tolerance, opts.linear_max_iter);

    double lambda = 1.0;
    bool accepted = false;
    while (lambda >= opts.min_damping) {
      std::vector<double> trial(pv.size());
      for (std::size_t q = 0; q < pv.size(); ++q) trial[q] = pv[q] + lambda * delta[q];
      if (inside_log_domain(trial, params)) {
        Field tf = Field::from_values(grid, std::move(trial));
        Field tr = mollifier_residual(tf, target, params);
        const double tn = tr.max_abs();
        if (tn < rnorm) {
          phi = std::move(tf);
          res = std::move(tr);
          rnorm = tn;
          accepted = true;
          break;
        }
      }
      lambda *= 0.5;
    }
    ++report.iterations;
    if (!accepted) break;
  }

  if (rnorm > opts.tolerance) {
    // Damped Picard fallback: (-Lap + c) phi_new = target - F'(phi) + c phi.
    report.used_picard = true;
    while (rnorm > opts.tolerance && report.iterations < opts.max_iter) {
      auto pv = phi.values();
      double c = 1.0;
      for (double s : pv) c = std::max(c, potential_second(s, params));
      auto tv = target.values();
      std::vector<double> rhs(pv.size());
      for (std::size_t q = 0; q < pv.size(); ++q) rhs[q] = tv[q] - potential_deriv(pv[q], params) + c * pv[q];
      const Field next = inverse_helmholtz(Field::from_values(grid, std::move(rhs)), c, 1.0, 1);
      auto nv = next.values();
      double lambda = 1.0;
      bool accepted = false;
      while (lambda >= opts.min_damping) {
        std::vector<double> trial(pv.size());
        for (std::size_t q = 0; q < pv.size(); ++q) trial[q] = pv[q] + lambda * (nv[q] - pv[q]);
        if (inside_log_domain(trial, params)) {
          Field tf = Field::from_values(grid, std::move(trial));
          Field tr = mollifier_residual(tf, target, params);
          const double tn = tr.max_abs();
          if (tn < rnorm) {
            phi = std::move(tf);
            res = std::move(tr);
            rnorm = tn;
            accepted = true;
            break;
          }
        }
        lambda *= 0.5;
      }
      ++report.iterations;
      if (!accepted) break;
    }
  }

  report.residual = rnorm;
  if (rnorm > opts.tolerance)
    throw NonConvergence("mollify_initial_phi: residual " + std::to_string(rnorm) + " after " +
                         std::to_string(report.iterations) + " iterations");
  report.separation = 1.0 - max_abs(phi.values());
  report.mean_drift = std::abs(phi.mean() - phi0.mean());
  check_separation(phi, params);
  return {std::move(phi), report};
}

}  // namespace magg
