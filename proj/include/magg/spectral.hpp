#pragma once

// Fourier-side calculus on the periodic square [0, L)^2.
//
// Conventions used throughout the library:
//   * Real samples are stored row-major, values[j * n + i] = f(x_i, y_j) with
//     x_i = i * L / n and y_j = j * L / n.
//   * Spectral coefficients use the real-to-complex half layout:
//     coeffs[j * (n/2 + 1) + i] for kx index i in [0, n/2] and ky index j in
//     [0, n), FFT ordering along y.
//   * Coefficients are normalized so that f(x) = sum_k c_k exp(i k.x), i.e.
//     c = FFT(values) / n^2. With this choice the zero mode is the mean and
//     Plancherel reads  int |f|^2 dx = L^2 * sum_k |c_k|^2  (sum over the full
//     spectrum, so half-layout interior columns count twice).

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace magg {

using Complex = std::complex<double>;

enum class Axis { X, Y };
enum class DealiasRule { TwoThirds, Half };

class SpectralGrid;
using GridPtr = std::shared_ptr<const SpectralGrid>;

class SpectralGrid {
public:
  ~SpectralGrid();
  SpectralGrid(const SpectralGrid&) = delete;
  SpectralGrid& operator=(const SpectralGrid&) = delete;

  /// n even and >= 8, box_length > 0; throws ValidationError otherwise.
  static GridPtr make(int n, double box_length);

  int n() const noexcept { return n_; }
  int n_half() const noexcept { return n_ / 2 + 1; }
  double box_length() const noexcept { return box_length_; }
  double spacing() const noexcept { return box_length_ / n_; }
  double area() const noexcept { return box_length_ * box_length_; }
  std::size_t real_size() const noexcept { return static_cast<std::size_t>(n_) * n_; }
  std::size_t spectral_size() const noexcept { return static_cast<std::size_t>(n_) * n_half(); }

  /// Per-axis table 2pi/L * {0, 1, ..., n/2-1, -n/2, ..., -1}.
  const std::vector<double>& wavenumbers() const noexcept { return k_; }
  double k_max() const noexcept { return (n_ / 2) * k0_; }
  double k0() const noexcept { return k0_; }

  /// Integer mode numbers. The Nyquist index maps to -n/2.
  int mode_x(int i) const noexcept { return i == n_ / 2 ? -n_ / 2 : i; }
  int mode_y(int j) const noexcept { return j < n_ / 2 ? j : j - n_; }

  double kx(int i) const noexcept { return k_[i]; }
  double ky(int j) const noexcept { return k_[j]; }
  // First-derivative multipliers: the Nyquist mode has no odd partner, so its
  // derivative is defined as zero to keep results real.
  double kx_odd(int i) const noexcept { return i == n_ / 2 ? 0.0 : k_[i]; }
  double ky_odd(int j) const noexcept { return j == n_ / 2 ? 0.0 : k_[j]; }
  double k_squared(int i, int j) const noexcept { return k_[i] * k_[i] + k_[j] * k_[j]; }

  bool keeps_mode(int i, int j, DealiasRule rule) const noexcept;

  double x(int i) const noexcept { return i * spacing(); }
  double y(int j) const noexcept { return j * spacing(); }

  // Unnormalized transforms wrapped with the normalization above.
  void forward(std::span<const double> values, std::span<Complex> coeffs) const;
  void inverse(std::span<const Complex> coeffs, std::span<double> values) const;

private:
  SpectralGrid(int n, double box_length);

  struct Plans;
  int n_;
  double box_length_;
  double k0_;
  std::vector<double> k_;
  std::unique_ptr<Plans> plans_;
};

inline GridPtr make_grid(int n, double box_length) { return SpectralGrid::make(n, box_length); }

/// Scalar field with paired real-space and spectral representations. Whichever
/// side was written last is authoritative; the other is rebuilt on demand.
/// Not safe for concurrent reads of the *same* instance (lazy sync mutates).
class Field {
public:
  Field() = default;
  explicit Field(GridPtr grid);

  static Field constant(GridPtr grid, double value);
  static Field from_values(GridPtr grid, std::vector<double> values);
  static Field from_coeffs(GridPtr grid, std::vector<Complex> coeffs);
  template <class Fn>
  static Field from_function(GridPtr grid, Fn&& fn) {
    std::vector<double> v(grid->real_size());
    const int n = grid->n();
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(j) * n + i] = fn(grid->x(i), grid->y(j));
    return from_values(std::move(grid), std::move(v));
  }

  bool empty() const noexcept { return grid_ == nullptr; }
  const SpectralGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }

  std::span<const double> values() const;
  std::span<const Complex> coeffs() const;
  bool values_fresh() const noexcept { return values_fresh_; }
  bool coeffs_fresh() const noexcept { return coeffs_fresh_; }

  // Mutable access marks the other representation stale.
  std::vector<double>& mutable_values();
  std::vector<Complex>& mutable_coeffs();

  double at(int i, int j) const { return values()[static_cast<std::size_t>(j) * grid_->n() + i]; }
  Complex mode(int i, int j) const { return coeffs()[static_cast<std::size_t>(j) * grid_->n_half() + i]; }

  double mean() const;
  double min() const;
  double max() const;
  double max_abs() const;
  bool is_finite() const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);

private:
  void sync_values() const;
  void sync_coeffs() const;

  GridPtr grid_;
  mutable std::vector<double> values_;
  mutable std::vector<Complex> coeffs_;
  mutable bool values_fresh_ = false;
  mutable bool coeffs_fresh_ = false;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator-(Field a);
Field operator*(double s, Field a);
Field operator*(Field a, double s);

struct VecField {
  Field x;
  Field y;

  VecField() = default;
  VecField(Field x_comp, Field y_comp);
  explicit VecField(GridPtr grid);

  const SpectralGrid& grid() const { return x.grid(); }
  const GridPtr& grid_ptr() const { return x.grid_ptr(); }

  VecField& operator+=(const VecField& o);
  VecField& operator-=(const VecField& o);
  VecField& operator*=(double s);
};

VecField operator+(VecField a, const VecField& b);
VecField operator-(VecField a, const VecField& b);
VecField operator*(double s, VecField a);

// Pointwise real-space operations. Not dealiased.
Field multiply(const Field& a, const Field& b);
template <class Fn>
Field map_values(const Field& f, Fn&& fn) {
  auto src = f.values();
  std::vector<double> out(src.size());
  for (std::size_t q = 0; q < src.size(); ++q) out[q] = fn(src[q]);
  return Field::from_values(f.grid_ptr(), std::move(out));
}
double max_norm(const VecField& v);

// Spectral calculus.
Field derivative(const Field& f, Axis axis);
VecField gradient(const Field& f);
Field divergence(const VecField& v);
Field laplacian(const Field& f);

/// Solves (a + b (-Lap)^power) g = f, power in {1, 2}. With a == 0 the mean of
/// f must vanish (MeanModeError otherwise) and g gets zero mean.
Field inverse_helmholtz(const Field& f, double a, double b, int power = 1);

/// Fourier Leray projection (I - k k^T / |k|^2). The mean passes through.
VecField leray_project(const VecField& v);
/// Potential q with v - P v = grad q, zero mean.
Field gradient_potential(const VecField& v);

/// curl2 v = d1 v2 - d2 v1.
Field curl2(const VecField& v);
/// curl1 w = (d2 w, -d1 w).
VecField curl1(const Field& w);

Field dealias(const Field& f, DealiasRule rule = DealiasRule::TwoThirds);
VecField dealias(const VecField& v, DealiasRule rule = DealiasRule::TwoThirds);

/// sum_k (1 + |k|^2)^order |c_k|^2 * L^2; order 0 equals int f^2 dx.
double sobolev_norm_sq(const Field& f, int order);
double sobolev_norm_sq(const VecField& v, int order);

/// Trapezoidal (spectrally exact for band-limited integrands) quadrature.
double integrate(const Field& f);

/// Spectral resampling onto another grid with the same box (truncate or zero-pad).
Field resample(const Field& f, const GridPtr& target);

}  // namespace magg
