#include "biharm/torus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "fft.hpp"

namespace biharm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

std::size_t ipow(int base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= static_cast<std::size_t>(base);
  return r;
}

// A base-grid axis index lands on one refined index, or on two (weight 1/2
// each) when it is the Nyquist mode, so the padded interpolant stays real.
struct AxisImage {
  std::array<int, 2> index{};
  std::array<double, 2> weight{};
  int count = 0;
};

AxisImage axis_image(int index, int base, int refined) {
  AxisImage img;
  if (refined == base) {
    img.index[0] = index;
    img.weight[0] = 1.0;
    img.count = 1;
    return img;
  }
  if (index == base / 2) {
    img.index = {base / 2, refined - base / 2};
    img.weight = {0.5, 0.5};
    img.count = 2;
    return img;
  }
  const int m = index < base / 2 ? index : index - base;
  img.index[0] = m >= 0 ? m : refined + m;
  img.weight[0] = 1.0;
  img.count = 1;
  return img;
}

template <class Visit>
void for_each_image(const TorusGeometry& g, int refined, Visit&& visit) {
  const int M = g.grid_size();
  if (g.d_eff() == 1) {
    for (int i0 = 0; i0 < M; ++i0) {
      const AxisImage a = axis_image(i0, M, refined);
      for (int s = 0; s < a.count; ++s) visit(static_cast<std::size_t>(i0), static_cast<std::size_t>(a.index[s]), a.weight[s]);
    }
    return;
  }
  for (int i1 = 0; i1 < M; ++i1) {
    const AxisImage b = axis_image(i1, M, refined);
    for (int i0 = 0; i0 < M; ++i0) {
      const AxisImage a = axis_image(i0, M, refined);
      const std::size_t base_flat = static_cast<std::size_t>(i0) + static_cast<std::size_t>(M) * i1;
      for (int s = 0; s < a.count; ++s) {
        for (int t = 0; t < b.count; ++t) {
          const std::size_t ref_flat =
              static_cast<std::size_t>(a.index[s]) + static_cast<std::size_t>(refined) * b.index[t];
          visit(base_flat, ref_flat, a.weight[s] * b.weight[t]);
        }
      }
    }
  }
}

}  // namespace

TorusGeometry::TorusGeometry(int n_ambient, int d_eff, int grid_size)
    : n_ambient_(n_ambient), d_eff_(d_eff), grid_size_(grid_size) {
  if (n_ambient < 5) throw std::invalid_argument("n_ambient must be >= 5 (got " + std::to_string(n_ambient) + ")");
  if (d_eff != 1 && d_eff != 2) throw std::invalid_argument("d_eff must be 1 or 2");
  if (d_eff > n_ambient) throw std::invalid_argument("d_eff exceeds n_ambient");
  if (!is_power_of_two(grid_size) || grid_size < 8)
    throw std::invalid_argument("grid_size must be a power of two >= 8 (got " + std::to_string(grid_size) + ")");
  num_nodes_ = ipow(grid_size, d_eff);
  lap_symbol_.resize(num_nodes_);
  for (std::size_t flat = 0; flat < num_nodes_; ++flat) {
    double s = 0.0;
    for (int ax = 0; ax < d_eff_; ++ax) {
      const double k = kTwoPi * frequency(axis_index(flat, ax));
      s += k * k;
    }
    lap_symbol_[flat] = s;
  }
}

double TorusGeometry::critical_exponent() const {
  return 2.0 * n_ambient_ / static_cast<double>(n_ambient_ - 4);
}

int TorusGeometry::axis_index(std::size_t flat, int axis) const {
  if (axis == 0) return static_cast<int>(flat % static_cast<std::size_t>(grid_size_));
  return static_cast<int>(flat / static_cast<std::size_t>(grid_size_));
}

double TorusGeometry::coord(std::size_t node, int axis) const {
  return static_cast<double>(axis_index(node, axis)) / grid_size_;
}

int TorusGeometry::max_abs_frequency(std::size_t flat) const {
  int m = 0;
  for (int ax = 0; ax < d_eff_; ++ax) m = std::max(m, std::abs(frequency(axis_index(flat, ax))));
  return m;
}

GeometryPtr make_geometry(int n_ambient, int d_eff, int grid_size) {
  return std::make_shared<const TorusGeometry>(n_ambient, d_eff, grid_size);
}

// ---------------------------------------------------------------------------

SpectralField SpectralField::from_samples(GeometryPtr geometry, std::vector<double> samples) {
  if (!geometry) throw std::invalid_argument("null geometry");
  if (samples.size() != geometry->num_nodes()) throw GeometryMismatch("sample count does not match geometry");
  std::vector<cplx> coeffs(samples.size());
  detail::fft_forward(geometry->grid_size(), geometry->d_eff(), samples, coeffs);
  return SpectralField(std::move(geometry), std::move(samples), std::move(coeffs));
}

SpectralField SpectralField::from_coeffs(GeometryPtr geometry, std::vector<cplx> coeffs) {
  if (!geometry) throw std::invalid_argument("null geometry");
  if (coeffs.size() != geometry->num_nodes()) throw GeometryMismatch("coefficient count does not match geometry");
  std::vector<double> samples(coeffs.size());
  detail::fft_inverse(geometry->grid_size(), geometry->d_eff(), coeffs, samples);
  return SpectralField(std::move(geometry), std::move(samples), std::move(coeffs));
}

SpectralField SpectralField::constant(GeometryPtr geometry, double value) {
  const std::size_t n = geometry->num_nodes();
  std::vector<double> s(n, value);
  std::vector<cplx> c(n, cplx{});
  c[0] = value;
  return SpectralField(std::move(geometry), std::move(s), std::move(c));
}

SpectralField SpectralField::combine(double alpha, double beta, const SpectralField& x) const {
  require_same_geometry(*this, x);
  std::vector<double> s(samples_.size());
  std::vector<cplx> c(coeffs_.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = alpha * samples_[i] + beta * x.samples_[i];
    c[i] = alpha * coeffs_[i] + beta * x.coeffs_[i];
  }
  return SpectralField(geometry_, std::move(s), std::move(c));
}

SpectralField SpectralField::operator+(const SpectralField& rhs) const { return combine(1.0, 1.0, rhs); }
SpectralField SpectralField::operator-(const SpectralField& rhs) const { return combine(1.0, -1.0, rhs); }
SpectralField SpectralField::axpy(double alpha, const SpectralField& x) const { return combine(1.0, alpha, x); }

SpectralField SpectralField::scaled(double factor) const {
  std::vector<double> s(samples_);
  std::vector<cplx> c(coeffs_);
  for (auto& v : s) v *= factor;
  for (auto& v : c) v *= factor;
  return SpectralField(geometry_, std::move(s), std::move(c));
}

void require_same_geometry(const SpectralField& a, const SpectralField& b) {
  if (a.geometry() != b.geometry() && !(a.geom() == b.geom()))
    throw GeometryMismatch("operands live on different torus geometries");
}

// ---------------------------------------------------------------------------

SpectralField laplacian(const SpectralField& u) {
  const auto sym = u.geom().laplacian_symbols();
  return apply_multiplier(u, [&](std::size_t i) { return sym[i]; });
}

SpectralField bilaplacian(const SpectralField& u) {
  const auto sym = u.geom().laplacian_symbols();
  return apply_multiplier(u, [&](std::size_t i) { return sym[i] * sym[i]; });
}

SpectralField partial(const SpectralField& u, int axis) {
  const TorusGeometry& g = u.geom();
  if (axis < 0 || axis >= g.d_eff()) throw std::invalid_argument("partial: axis out of range");
  std::vector<cplx> c(u.coeffs().begin(), u.coeffs().end());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const int idx = g.axis_index(i, axis);
    if (g.is_nyquist(idx)) {
      c[i] = 0.0;
    } else {
      c[i] *= cplx(0.0, kTwoPi * g.frequency(idx));
    }
  }
  return SpectralField::from_coeffs(u.geometry(), std::move(c));
}

std::vector<double> upsample(const SpectralField& u, int refined) {
  const TorusGeometry& g = u.geom();
  if (refined < g.grid_size()) throw std::invalid_argument("upsample: refined grid smaller than base grid");
  if (refined == g.grid_size()) return {u.samples().begin(), u.samples().end()};
  const std::size_t n = ipow(refined, g.d_eff());
  std::vector<cplx> c(n, cplx{});
  const auto src = u.coeffs();
  for_each_image(g, refined, [&](std::size_t base, std::size_t ref, double w) { c[ref] += w * src[base]; });
  std::vector<double> out(n);
  detail::fft_inverse(refined, g.d_eff(), c, out);
  return out;
}

SpectralField downsample_adjoint(const GeometryPtr& geometry, std::span<const double> refined_samples, int refined) {
  const TorusGeometry& g = *geometry;
  const std::size_t n = ipow(refined, g.d_eff());
  if (refined_samples.size() != n) throw std::invalid_argument("downsample_adjoint: size mismatch");
  if (refined == g.grid_size()) {
    return SpectralField::from_samples(geometry, {refined_samples.begin(), refined_samples.end()});
  }
  std::vector<cplx> hat(n);
  detail::fft_forward(refined, g.d_eff(), refined_samples, hat);
  std::vector<cplx> c(g.num_nodes(), cplx{});
  for_each_image(g, refined, [&](std::size_t base, std::size_t ref, double w) { c[base] += w * hat[ref]; });
  return SpectralField::from_coeffs(geometry, std::move(c));
}

SpectralField div_a_grad(const SpectralField& a, const SpectralField& u) {
  require_same_geometry(a, u);
  const TorusGeometry& g = u.geom();
  const int P = padded_grid_size(g);
  const std::vector<double> a_pad = upsample(a, P);
  SpectralField acc = SpectralField::zero(u.geometry());
  for (int ax = 0; ax < g.d_eff(); ++ax) {
    std::vector<double> prod = upsample(partial(u, ax), P);
    for (std::size_t j = 0; j < prod.size(); ++j) prod[j] *= a_pad[j];
    acc = acc + partial(downsample_adjoint(u.geometry(), prod, P), ax);
  }
  return acc;
}

double weighted_grad_sq_integral(const SpectralField& a, const SpectralField& u) {
  require_same_geometry(a, u);
  const TorusGeometry& g = u.geom();
  const int P = padded_grid_size(g);
  const std::vector<double> a_pad = upsample(a, P);
  double sum = 0.0;
  for (int ax = 0; ax < g.d_eff(); ++ax) {
    const std::vector<double> d = upsample(partial(u, ax), P);
    for (std::size_t j = 0; j < d.size(); ++j) sum += a_pad[j] * d[j] * d[j];
  }
  return sum / static_cast<double>(a_pad.size());
}

SpectralField band_limit(const SpectralField& u, int cap) {
  if (cap <= 0) return u;
  const TorusGeometry& g = u.geom();
  return apply_multiplier(u, [&](std::size_t i) { return g.max_abs_frequency(i) > cap ? 0.0 : 1.0; });
}

double integral(const SpectralField& u) { return u.coeffs()[0].real(); }

double inner(const SpectralField& u, const SpectralField& v) {
  require_same_geometry(u, v);
  const auto cu = u.coeffs();
  const auto cv = v.coeffs();
  double s = 0.0;
  for (std::size_t i = 0; i < cu.size(); ++i) s += cu[i].real() * cv[i].real() + cu[i].imag() * cv[i].imag();
  return s;
}

double l2_norm_sq(const SpectralField& u) { return inner(u, u); }

double l2_norm_sq_quadrature(const SpectralField& u) {
  double s = 0.0;
  for (double v : u.samples()) s += v * v;
  return s * u.geom().quadrature_weight();
}

double lp_norm(const SpectralField& u, double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw std::invalid_argument("lp_norm: p must be a finite real >= 1");
  double s = 0.0;
  for (double v : u.samples()) s += std::pow(std::abs(v), p);
  return std::pow(s * u.geom().quadrature_weight(), 1.0 / p);
}

double grad_sq_integral(const SpectralField& u) {
  const auto sym = u.geom().laplacian_symbols();
  const auto c = u.coeffs();
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += sym[i] * std::norm(c[i]);
  return s;
}

double laplacian_sq_integral(const SpectralField& u) {
  const auto sym = u.geom().laplacian_symbols();
  const auto c = u.coeffs();
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += sym[i] * sym[i] * std::norm(c[i]);
  return s;
}

double hessian_sq_integral(const SpectralField& u) {
  const int d = u.geom().d_eff();
  double s = 0.0;
  for (int i = 0; i < d; ++i) {
    const SpectralField di = partial(u, i);
    for (int j = 0; j < d; ++j) s += l2_norm_sq(partial(di, j));
  }
  return s;
}

SpectralField random_smooth_field(const GeometryPtr& geometry, int cap, std::mt19937_64& rng, double decay) {
  const TorusGeometry& g = *geometry;
  if (cap < 0 || cap >= g.grid_size() / 2) throw std::invalid_argument("random_smooth_field: cap out of range");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<cplx> c(g.num_nodes(), cplx{});
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (g.max_abs_frequency(i) > cap) continue;
    const double amp = std::pow(1.0 + g.laplacian_symbol(i) / (4.0 * std::numbers::pi * std::numbers::pi), -decay);
    const double re = normal(rng);
    const double im = normal(rng);
    c[i] = amp * cplx(re, im);
  }
  // Hermitian symmetrization: c_m <- (c_m + conj(c_-m)) / 2.
  const int M = g.grid_size();
  std::vector<cplx> sym(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    std::size_t j = 0;
    std::size_t stride = 1;
    for (int ax = 0; ax < g.d_eff(); ++ax) {
      const int idx = g.axis_index(i, ax);
      j += stride * static_cast<std::size_t>((M - idx) % M);
      stride *= static_cast<std::size_t>(M);
    }
    sym[i] = 0.5 * (c[i] + std::conj(c[j]));
  }
  return SpectralField::from_coeffs(geometry, std::move(sym));
}

}  // namespace biharm
