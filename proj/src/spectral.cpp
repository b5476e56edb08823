#include "magg/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "magg/errors.hpp"

namespace magg {

namespace {

// FFTW's planner is not re-entrant; execution through the new-array API is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr unsigned kPlanFlags = FFTW_ESTIMATE | FFTW_UNALIGNED;

void require_same_grid(const Field& a, const Field& b) {
  if (a.grid_ptr() != b.grid_ptr() &&
      (a.grid().n() != b.grid().n() || a.grid().box_length() != b.grid().box_length()))
    throw GridMismatch("fields live on different grids");
}

std::size_t sidx(const SpectralGrid& g, int i, int j) {
  return static_cast<std::size_t>(j) * g.n_half() + i;
}

}  // namespace

SeparationViolation::SeparationViolation(double value, std::optional<std::size_t> index)
    : SolverError("phase field left the logarithmic potential domain: value " + std::to_string(value) +
                  (index ? " at grid index " + std::to_string(*index) : std::string{})),
      value_(value),
      index_(index) {}

// --------------------------------------------------------------------------
// SpectralGrid

struct SpectralGrid::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

SpectralGrid::SpectralGrid(int n, double box_length)
    : n_(n), box_length_(box_length), k0_(2.0 * std::numbers::pi / box_length), k_(n), plans_(std::make_unique<Plans>()) {
  for (int j = 0; j < n; ++j) k_[j] = k0_ * (j < n / 2 ? j : j - n);

  std::vector<double> rbuf(real_size());
  std::vector<Complex> cbuf(spectral_size());
  auto* cptr = reinterpret_cast<fftw_complex*>(cbuf.data());
  std::lock_guard lock(planner_mutex());
  plans_->r2c = fftw_plan_dft_r2c_2d(n, n, rbuf.data(), cptr, kPlanFlags);
  plans_->c2r = fftw_plan_dft_c2r_2d(n, n, cptr, rbuf.data(), kPlanFlags);
}

SpectralGrid::~SpectralGrid() {
  std::lock_guard lock(planner_mutex());
  if (plans_->r2c) fftw_destroy_plan(plans_->r2c);
  if (plans_->c2r) fftw_destroy_plan(plans_->c2r);
}

GridPtr SpectralGrid::make(int n, double box_length) {
  if (n < 8) throw ValidationError("grid resolution must be at least 8, got " + std::to_string(n));
  if (n % 2 != 0) throw ValidationError("grid resolution must be even, got " + std::to_string(n));
  if (!(box_length > 0.0) || !std::isfinite(box_length))
    throw ValidationError("box_length must be positive and finite");
  return GridPtr(new SpectralGrid(n, box_length));
}

bool SpectralGrid::keeps_mode(int i, int j, DealiasRule rule) const noexcept {
  const int mx = std::abs(mode_x(i));
  const int my = std::abs(mode_y(j));
  // |m| <= (2/3)(n/2) and |m| <= n/4 written in integer arithmetic.
  const int scale = rule == DealiasRule::TwoThirds ? 3 : 4;
  return scale * mx <= n_ && scale * my <= n_;
}

void SpectralGrid::forward(std::span<const double> values, std::span<Complex> coeffs) const {
  // r2c does not modify its input with FFTW_ESTIMATE on out-of-place plans.
  fftw_execute_dft_r2c(plans_->r2c, const_cast<double*>(values.data()),
                       reinterpret_cast<fftw_complex*>(coeffs.data()));
  const double scale = 1.0 / static_cast<double>(real_size());
  for (auto& c : coeffs) c *= scale;
}

void SpectralGrid::inverse(std::span<const Complex> coeffs, std::span<double> values) const {
  // Multi-dimensional c2r destroys its input.
  std::vector<Complex> scratch(coeffs.begin(), coeffs.end());
  fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(scratch.data()), values.data());
}

// --------------------------------------------------------------------------
// Field

Field::Field(GridPtr grid)
    : grid_(std::move(grid)), coeffs_(grid_->spectral_size()), coeffs_fresh_(true) {}

Field Field::constant(GridPtr grid, double value) {
  Field f(std::move(grid));
  f.coeffs_[0] = value;
  return f;
}

Field Field::from_values(GridPtr grid, std::vector<double> values) {
  if (values.size() != grid->real_size()) throw GridMismatch("value buffer size does not match grid");
  Field f;
  f.grid_ = std::move(grid);
  f.values_ = std::move(values);
  f.values_fresh_ = true;
  return f;
}

Field Field::from_coeffs(GridPtr grid, std::vector<Complex> coeffs) {
  if (coeffs.size() != grid->spectral_size()) throw GridMismatch("coefficient buffer size does not match grid");
  Field f;
  f.grid_ = std::move(grid);
  f.coeffs_ = std::move(coeffs);
  f.coeffs_fresh_ = true;
  return f;
}

void Field::sync_values() const {
  if (values_fresh_) return;
  values_.resize(grid_->real_size());
  grid_->inverse(coeffs_, values_);
  values_fresh_ = true;
}

void Field::sync_coeffs() const {
  if (coeffs_fresh_) return;
  coeffs_.resize(grid_->spectral_size());
  grid_->forward(values_, coeffs_);
  coeffs_fresh_ = true;
}

std::span<const double> Field::values() const {
  sync_values();
  return values_;
}

std::span<const Complex> Field::coeffs() const {
  sync_coeffs();
  return coeffs_;
}

std::vector<double>& Field::mutable_values() {
  sync_values();
  coeffs_fresh_ = false;
  return values_;
}

std::vector<Complex>& Field::mutable_coeffs() {
  sync_coeffs();
  values_fresh_ = false;
  return coeffs_;
}

double Field::mean() const { return coeffs()[0].real(); }

double Field::min() const {
  auto v = values();
  return *std::min_element(v.begin(), v.end());
}

double Field::max() const {
  auto v = values();
  return *std::max_element(v.begin(), v.end());
}

double Field::max_abs() const {
  double m = 0.0;
  for (double x : values()) m = std::max(m, std::abs(x));
  return m;
}

bool Field::is_finite() const {
  if (values_fresh_) {
    return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
  }
  return std::all_of(coeffs_.begin(), coeffs_.end(),
                     [](Complex c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); });
}

namespace {

// Combine two fields in whichever representation both already hold, so that
// spectral-side pipelines stay spectral.
template <class Op>
void combine(Field& a, const Field& b, Op op) {
  require_same_grid(a, b);
  if (a.coeffs_fresh() && b.coeffs_fresh()) {
    auto& ac = a.mutable_coeffs();
    auto bc = b.coeffs();
    for (std::size_t q = 0; q < ac.size(); ++q) ac[q] = op(ac[q], bc[q]);
  } else {
    auto& av = a.mutable_values();
    auto bv = b.values();
    for (std::size_t q = 0; q < av.size(); ++q) av[q] = op(av[q], bv[q]);
  }
}

}  // namespace

Field& Field::operator+=(const Field& other) {
  combine(*this, other, [](auto x, auto y) { return x + y; });
  return *this;
}

Field& Field::operator-=(const Field& other) {
  combine(*this, other, [](auto x, auto y) { return x - y; });
  return *this;
}

Field& Field::operator*=(double s) {
  if (coeffs_fresh_) {
    for (auto& c : coeffs_) c *= s;
    values_fresh_ = false;
  } else {
    for (auto& v : values_) v *= s;
  }
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator-(Field a) { return a *= -1.0; }
Field operator*(double s, Field a) { return a *= s; }
Field operator*(Field a, double s) { return a *= s; }

// --------------------------------------------------------------------------
// VecField

VecField::VecField(Field x_comp, Field y_comp) : x(std::move(x_comp)), y(std::move(y_comp)) {
  require_same_grid(x, y);
}

VecField::VecField(GridPtr grid) : x(grid), y(grid) {}

VecField& VecField::operator+=(const VecField& o) {
  x += o.x;
  y += o.y;
  return *this;
}

VecField& VecField::operator-=(const VecField& o) {
  x -= o.x;
  y -= o.y;
  return *this;
}

VecField& VecField::operator*=(double s) {
  x *= s;
  y *= s;
  return *this;
}

VecField operator+(VecField a, const VecField& b) { return a += b; }
VecField operator-(VecField a, const VecField& b) { return a -= b; }
VecField operator*(double s, VecField a) { return a *= s; }

// --------------------------------------------------------------------------
// Pointwise

Field multiply(const Field& a, const Field& b) {
  require_same_grid(a, b);
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t q = 0; q < av.size(); ++q) out[q] = av[q] * bv[q];
  return Field::from_values(a.grid_ptr(), std::move(out));
}

double max_norm(const VecField& v) {
  auto xv = v.x.values();
  auto yv = v.y.values();
  double m = 0.0;
  for (std::size_t q = 0; q < xv.size(); ++q) m = std::max(m, std::hypot(xv[q], yv[q]));
  return m;
}

// --------------------------------------------------------------------------
// Spectral calculus

namespace {

// Multiply every coefficient by a per-mode factor fn(i, j).
template <class Fn>
Field spectral_map(const Field& f, Fn&& fn) {
  const auto& g = f.grid();
  auto src = f.coeffs();
  std::vector<Complex> out(src.size());
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n_half(); ++i) out[sidx(g, i, j)] = fn(i, j) * src[sidx(g, i, j)];
  return Field::from_coeffs(f.grid_ptr(), std::move(out));
}

}  // namespace

Field derivative(const Field& f, Axis axis) {
  if (!f.is_finite()) throw NonFiniteError("derivative: input field contains non-finite values");
  const auto& g = f.grid();
  constexpr Complex I{0.0, 1.0};
  if (axis == Axis::X) return spectral_map(f, [&](int i, int) { return I * g.kx_odd(i); });
  return spectral_map(f, [&](int, int j) { return I * g.ky_odd(j); });
}

VecField gradient(const Field& f) { return {derivative(f, Axis::X), derivative(f, Axis::Y)}; }

Field divergence(const VecField& v) {
  const auto& g = v.grid();
  auto cx = v.x.coeffs();
  auto cy = v.y.coeffs();
  std::vector<Complex> out(cx.size());
  constexpr Complex I{0.0, 1.0};
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n_half(); ++i) {
      const auto q = sidx(g, i, j);
      out[q] = I * (g.kx_odd(i) * cx[q] + g.ky_odd(j) * cy[q]);
    }
  return Field::from_coeffs(v.grid_ptr(), std::move(out));
}

Field laplacian(const Field& f) {
  const auto& g = f.grid();
  return spectral_map(f, [&](int i, int j) { return Complex(-g.k_squared(i, j)); });
}

Field inverse_helmholtz(const Field& f, double a, double b, int power) {
  if (power != 1 && power != 2) throw ValidationError("inverse_helmholtz: power must be 1 or 2");
  if (a < 0.0 || !(b > 0.0)) throw ValidationError("inverse_helmholtz: need a >= 0 and b > 0");
  const auto& g = f.grid();
  auto src = f.coeffs();
  if (a == 0.0) {
    const double scale = std::max(1.0, f.max_abs());
    if (std::abs(src[0]) > 1e-14 * scale)
      throw MeanModeError("inverse_helmholtz: a = 0 requires a zero-mean right-hand side");
  }
  std::vector<Complex> out(src.size());
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n_half(); ++i) {
      const auto q = sidx(g, i, j);
      if (i == 0 && j == 0) {
        out[q] = a > 0.0 ? src[q] / a : Complex{};
        continue;
      }
      const double k2 = g.k_squared(i, j);
      out[q] = src[q] / (a + b * (power == 1 ? k2 : k2 * k2));
    }
  return Field::from_coeffs(f.grid_ptr(), std::move(out));
}

VecField leray_project(const VecField& v) {
  const auto& g = v.grid();
  auto cx = v.x.coeffs();
  auto cy = v.y.coeffs();
  std::vector<Complex> ox(cx.begin(), cx.end());
  std::vector<Complex> oy(cy.begin(), cy.end());
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n_half(); ++i) {
      const double kx = g.kx_odd(i);
      const double ky = g.ky_odd(j);
      const double k2 = kx * kx + ky * ky;
      if (k2 == 0.0) continue;
      const auto q = sidx(g, i, j);
      const Complex kdotv = (kx * cx[q] + ky * cy[q]) / k2;
      ox[q] = cx[q] - kx * kdotv;
      oy[q] = cy[q] - ky * kdotv;
    }
  return {Field::from_coeffs(v.grid_ptr(), std::move(ox)), Field::from_coeffs(v.grid_ptr(), std::move(oy))};
}

Field gradient_potential(const VecField& v) {
  const auto& g = v.grid();
  auto cx = v.x.coeffs();
  auto cy = v.y.coeffs();
  std::vector<Complex> out(cx.size());
  constexpr Complex I{0.0, 1.0};
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n_half(); ++i) {
      const double kx = g.kx_odd(i);
      const double ky = g.ky_odd(j);
      const double k2 = kx * kx + ky * ky;
      if (k2 == 0.0) continue;
      const auto q = sidx(g, i, j);
      out[q] = -I * (kx * cx[q] + ky * cy[q]) / k2;
    }
  return Field::from_coeffs(v.grid_ptr(), std::move(out));
}

Field curl2(const VecField& v) { return derivative(v.y, Axis::X) - derivative(v.x, Axis::Y); }

VecField curl1(const Field& w) { return {derivative(w, Axis::Y), -derivative(w, Axis::X)}; }

Field dealias(const Field& f, DealiasRule rule) {
  const auto& g = f.grid();
  return spectral_map(f, [&](int i, int j) { return g.keeps_mode(i, j, rule) ? 1.0 : 0.0; });
}

VecField dealias(const VecField& v, DealiasRule rule) { return {dealias(v.x, rule), dealias(v.y, rule)}; }

double sobolev_norm_sq(const Field& f, int order) {
  if (order < 0 || order > 2) throw ValidationError("sobolev_norm_sq: order must be 0, 1 or 2");
  const auto& g = f.grid();
  auto c = f.coeffs();
  const int nyq = g.n() / 2;
  double sum = 0.0;
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n_half(); ++i) {
      const double weight = (i == 0 || i == nyq) ? 1.0 : 2.0;
      const double m = 1.0 + g.k_squared(i, j);
      const double mult = order == 0 ? 1.0 : (order == 1 ? m : m * m);
      sum += weight * mult * std::norm(c[sidx(g, i, j)]);
    }
  return sum * g.area();
}

double sobolev_norm_sq(const VecField& v, int order) {
  return sobolev_norm_sq(v.x, order) + sobolev_norm_sq(v.y, order);
}

double integrate(const Field& f) {
  if (f.values_fresh() || !f.coeffs_fresh()) {
    double s = 0.0;
    for (double x : f.values()) s += x;
    return s * f.grid().spacing() * f.grid().spacing();
  }
  return f.mean() * f.grid().area();
}

Field resample(const Field& f, const GridPtr& target) {
  const auto& src = f.grid();
  if (src.box_length() != target->box_length()) throw GridMismatch("resample: box lengths differ");
  const int limit = std::min(src.n(), target->n()) / 2;  // shared Nyquist is dropped
  auto c = f.coeffs();
  std::vector<Complex> out(target->spectral_size());
  for (int j = 0; j < src.n(); ++j) {
    const int my = src.mode_y(j);
    if (std::abs(my) >= limit) continue;
    const int tj = my >= 0 ? my : my + target->n();
    for (int i = 0; i < limit; ++i) out[sidx(*target, i, tj)] = c[sidx(src, i, j)];
  }
  return Field::from_coeffs(target, std::move(out));
}

}  // namespace magg
