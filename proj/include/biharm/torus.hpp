#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace biharm {

using cplx = std::complex<double>;

class GeometryMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Unit-volume flat torus T^n sampled on a uniform grid along its first
/// `d_eff` coordinates. Fields are constant along the remaining n - d_eff
/// coordinates, so integrals over those factor out to 1 while the Sobolev
/// exponents still use the ambient dimension n.
///
/// Spectral layout: flat index = i0 + M * i1 (axis 0 fastest); index i maps to
/// the integer frequency m = i for i < M/2 and m = i - M otherwise. The entry
/// i = M/2 is the Nyquist mode.
class TorusGeometry {
 public:
  TorusGeometry(int n_ambient, int d_eff, int grid_size);

  int n_ambient() const { return n_ambient_; }
  int d_eff() const { return d_eff_; }
  int grid_size() const { return grid_size_; }
  std::size_t num_nodes() const { return num_nodes_; }

  /// N = 2n / (n - 4).
  double critical_exponent() const;
  double quadrature_weight() const { return 1.0 / static_cast<double>(num_nodes_); }

  double coord(std::size_t node, int axis) const;
  int axis_index(std::size_t flat, int axis) const;
  int frequency(int index) const { return index < grid_size_ / 2 ? index : index - grid_size_; }
  bool is_nyquist(int index) const { return index == grid_size_ / 2; }

  /// |2 pi m|^2 for the mode stored at `flat`.
  double laplacian_symbol(std::size_t flat) const { return lap_symbol_[flat]; }
  std::span<const double> laplacian_symbols() const { return lap_symbol_; }
  /// Largest |m_i| over the axes of the mode stored at `flat`.
  int max_abs_frequency(std::size_t flat) const;

  bool operator==(const TorusGeometry& other) const {
    return n_ambient_ == other.n_ambient_ && d_eff_ == other.d_eff_ &&
           grid_size_ == other.grid_size_;
  }

 private:
  int n_ambient_;
  int d_eff_;
  int grid_size_;
  std::size_t num_nodes_;
  std::vector<double> lap_symbol_;
};

using GeometryPtr = std::shared_ptr<const TorusGeometry>;

GeometryPtr make_geometry(int n_ambient, int d_eff, int grid_size);

/// Real scalar field held both as grid samples and as normalized Fourier
/// coefficients (c_m = M^-d sum_j u_j e^{-2 pi i m.x_j}). Both views are
/// filled at construction and never mutated afterwards.
class SpectralField {
 public:
  static SpectralField from_samples(GeometryPtr geometry, std::vector<double> samples);
  /// Coefficients must be Hermitian-symmetric; the imaginary part of the
  /// inverse transform is discarded.
  static SpectralField from_coeffs(GeometryPtr geometry, std::vector<cplx> coeffs);
  static SpectralField constant(GeometryPtr geometry, double value);
  static SpectralField zero(GeometryPtr geometry) { return constant(std::move(geometry), 0.0); }

  const GeometryPtr& geometry() const { return geometry_; }
  const TorusGeometry& geom() const { return *geometry_; }
  std::span<const double> samples() const { return samples_; }
  std::span<const cplx> coeffs() const { return coeffs_; }
  std::size_t size() const { return samples_.size(); }

  SpectralField operator+(const SpectralField& rhs) const;
  SpectralField operator-(const SpectralField& rhs) const;
  SpectralField operator-() const { return scaled(-1.0); }
  SpectralField scaled(double factor) const;
  /// this + alpha * x
  SpectralField axpy(double alpha, const SpectralField& x) const;
  /// alpha * this + beta * x
  SpectralField combine(double alpha, double beta, const SpectralField& x) const;

 private:
  SpectralField(GeometryPtr geometry, std::vector<double> samples, std::vector<cplx> coeffs)
      : geometry_(std::move(geometry)), samples_(std::move(samples)), coeffs_(std::move(coeffs)) {}

  GeometryPtr geometry_;
  std::vector<double> samples_;
  std::vector<cplx> coeffs_;
};

void require_same_geometry(const SpectralField& a, const SpectralField& b);

// Fourier-multiplier calculus. Sign convention: Delta = -div grad, so the
// Laplacian multiplier is +|2 pi m|^2 and <Delta u, u> >= 0.

SpectralField laplacian(const SpectralField& u);
SpectralField bilaplacian(const SpectralField& u);
/// d/dx_axis; the Nyquist mode is dropped so the result stays real.
SpectralField partial(const SpectralField& u, int axis);
/// sum_i d_i(a d_i u) with the products a * d_i u dealiased by the 3/2 rule.
SpectralField div_a_grad(const SpectralField& a, const SpectralField& u);
/// Applies an arbitrary real multiplier symbol(flat index) in Fourier space.
template <class Symbol>
SpectralField apply_multiplier(const SpectralField& u, Symbol&& symbol) {
  std::vector<cplx> c(u.coeffs().begin(), u.coeffs().end());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= symbol(i);
  return SpectralField::from_coeffs(u.geometry(), std::move(c));
}
/// Zeroes every mode whose largest |m_i| exceeds `cap`; cap <= 0 is identity.
SpectralField band_limit(const SpectralField& u, int cap);

double integral(const SpectralField& u);
/// L^2 inner product on the unit-volume torus (spectral Parseval sum).
double inner(const SpectralField& u, const SpectralField& v);
double l2_norm_sq(const SpectralField& u);
/// L^2 norm squared evaluated by grid quadrature; agrees with l2_norm_sq by Parseval.
double l2_norm_sq_quadrature(const SpectralField& u);
/// Base-grid quadrature of |u|^p; throws std::invalid_argument for p < 1.
double lp_norm(const SpectralField& u, double p);
/// ||grad u||_2^2 = sum |2 pi m|^2 |c_m|^2.
double grad_sq_integral(const SpectralField& u);
double laplacian_sq_integral(const SpectralField& u);
/// ||grad^2 u||_2^2 = sum_ij ||d_i d_j u||^2 computed from spectral derivatives.
double hessian_sq_integral(const SpectralField& u);
/// integral of a |grad u|^2 on the 3/2-padded grid.
double weighted_grad_sq_integral(const SpectralField& a, const SpectralField& u);

/// Samples of the trigonometric interpolant of u on a grid with `refined`
/// nodes per axis (refined >= grid_size).
std::vector<double> upsample(const SpectralField& u, int refined);
/// Adjoint of `upsample` with respect to the two quadratures: the returned
/// base field g satisfies <g, phi> = refined quadrature of (w * upsample(phi))
/// for every base-grid field phi.
SpectralField downsample_adjoint(const GeometryPtr& geometry, std::span<const double> refined_samples,
                                 int refined);

/// Random real field with modes |m_i| <= cap (cap < M/2) and amplitudes
/// decaying like (1 + |m|^2)^-decay.
SpectralField random_smooth_field(const GeometryPtr& geometry, int cap, std::mt19937_64& rng, double decay = 1.0);

/// Refinement factor used for the non-polynomial power terms.
inline int power_grid_size(const TorusGeometry& g) { return 2 * g.grid_size(); }
/// 3/2-rule padded size used for products of two fields.
inline int padded_grid_size(const TorusGeometry& g) { return 3 * g.grid_size() / 2; }

}  // namespace biharm
