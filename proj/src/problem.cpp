#include "biharm/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

namespace biharm {

namespace {

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Integral over [0, 1] of max(-g, 0). Sign changes of g located on a fine
// scan are refined by TOMS 748, and Gauss-Kronrod runs on each piece where
// the integrand is smooth.
template <class G>
double negative_part_1d(const G& g) {
  using boost::math::quadrature::gauss_kronrod;
  constexpr int kScan = 2048;
  std::vector<double> breaks{0.0};
  double x0 = 0.0, g0 = g(0.0);
  for (int i = 1; i <= kScan; ++i) {
    const double x1 = static_cast<double>(i) / kScan;
    const double g1 = g(x1);
    if ((g0 < 0.0) != (g1 < 0.0) && g0 != 0.0 && g1 != 0.0) {
      boost::uintmax_t iters = 100;
      const auto r = boost::math::tools::toms748_solve(g, x0, x1, g0, g1,
                                                        boost::math::tools::eps_tolerance<double>(52), iters);
      breaks.push_back(0.5 * (r.first + r.second));
    }
    x0 = x1;
    g0 = g1;
  }
  breaks.push_back(1.0);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double lo = breaks[k], hi = breaks[k + 1];
    if (hi <= lo) continue;
    total += gauss_kronrod<double, 31>::integrate([&](double x) { return std::max(-g(x), 0.0); }, lo, hi, 15, 1e-14);
  }
  return total;
}

double adaptive_negative_part(const Expression& e, int d_eff) {
  using boost::math::quadrature::gauss_kronrod;
  if (d_eff == 1) return negative_part_1d([&](double x) { return e.evaluate(x, 0.0); });
  auto inner = [&](double x2) { return negative_part_1d([&](double x1) { return e.evaluate(x1, x2); }); };
  return gauss_kronrod<double, 15>::integrate(inner, 0.0, 1.0, 10, 1e-10);
}

}  // namespace

std::vector<double> sample_expression(const Expression& e, const TorusGeometry& g, int size) {
  if (e.uses_x2() && g.d_eff() < 2) throw ExpressionError("x2 used on a geometry with d_eff = 1", 0);
  std::size_t n = static_cast<std::size_t>(size);
  if (g.d_eff() == 2) n *= static_cast<std::size_t>(size);
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double x1 = static_cast<double>(j % static_cast<std::size_t>(size)) / size;
    const double x2 = g.d_eff() == 2 ? static_cast<double>(j / static_cast<std::size_t>(size)) / size : 0.0;
    out[j] = e.evaluate(x1, x2);
  }
  return out;
}

SpectralField parse_coefficient(const std::string& expr, const GeometryPtr& geometry) {
  const Expression e = Expression::parse(expr);
  return SpectralField::from_samples(geometry, sample_expression(e, *geometry, geometry->grid_size()));
}

ExponentPair ExponentPair::make(double q, const TorusGeometry& g) {
  const double N = g.critical_exponent();
  if (std::abs(q - N) <= 1e-12 * N) q = N;
  if (!(q > 2.0) || q > N) {
    throw HypothesisViolated("exponent q = " + std::to_string(q) + " outside (2, " + std::to_string(N) + "]");
  }
  return {q, N, q < N};
}

// ---------------------------------------------------------------------------

ProblemData::ProblemData(SpectralField a, SpectralField h, SpectralField f, std::vector<double> f_ref)
    : a_(std::move(a)),
      h_(std::move(h)),
      f_(std::move(f)),
      f_plus_(SpectralField::zero(f_.geometry())),
      f_minus_(SpectralField::zero(f_.geometry())),
      f_ref_(std::move(f_ref)) {
  require_same_geometry(a_, h_);
  require_same_geometry(a_, f_);
  const auto fs = f_.samples();
  std::vector<double> fp(fs.size()), fm(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    fp[i] = std::max(fs[i], 0.0);
    fm[i] = std::max(-fs[i], 0.0);
  }
  f_plus_ = SpectralField::from_samples(f_.geometry(), std::move(fp));
  f_minus_ = SpectralField::from_samples(f_.geometry(), std::move(fm));
  f_plus_ref_.resize(f_ref_.size());
  f_minus_ref_.resize(f_ref_.size());
  for (std::size_t i = 0; i < f_ref_.size(); ++i) {
    f_plus_ref_[i] = std::max(f_ref_[i], 0.0);
    f_minus_ref_[i] = std::max(-f_ref_[i], 0.0);
  }

  int_f_ = mean(f_ref_);
  int_f_minus_ = mean(f_minus_ref_);
  sup_f_ = *std::max_element(fs.begin(), fs.end());
  sup_f_plus_ = std::max(sup_f_, 0.0);
  f_sup_abs_ = 0.0;
  for (double v : fs) f_sup_abs_ = std::max(f_sup_abs_, std::abs(v));
  const auto as = a_.samples();
  const auto hs = h_.samples();
  a_plus_sup_ = 0.0;
  min_a_ = std::numeric_limits<double>::infinity();
  a_is_zero_ = true;
  for (double v : as) {
    a_plus_sup_ = std::max(a_plus_sup_, v);
    min_a_ = std::min(min_a_, v);
    if (v != 0.0) a_is_zero_ = false;
  }
  h_sup_ = 0.0;
  min_h_ = std::numeric_limits<double>::infinity();
  max_h_ = -std::numeric_limits<double>::infinity();
  for (double v : hs) {
    h_sup_ = std::max(h_sup_, std::abs(v));
    min_h_ = std::min(min_h_, v);
    max_h_ = std::max(max_h_, v);
  }
  flags_.h_negative = max_h_ < 0.0;
  flags_.f_minus_mass_positive = int_f_minus_ > 0.0;
  flags_.f_positive_somewhere = sup_f_ > 0.0;
}

ProblemData ProblemData::from_expressions(const GeometryPtr& geometry, const std::string& a, const std::string& h,
                                          const std::string& f) {
  const Expression fe = Expression::parse(f);
  ProblemData p(parse_coefficient(a, geometry), parse_coefficient(h, geometry), parse_coefficient(f, geometry),
                sample_expression(fe, *geometry, power_grid_size(*geometry)));
  p.int_f_minus_ = adaptive_negative_part(fe, geometry->d_eff());
  p.flags_.f_minus_mass_positive = p.int_f_minus_ > 0.0;
  p.a_expr_ = a;
  p.h_expr_ = h;
  p.f_expr_ = f;
  return p;
}

ProblemData ProblemData::from_fields(SpectralField a, SpectralField h, SpectralField f) {
  auto ref = upsample(f, power_grid_size(f.geom()));
  return ProblemData(std::move(a), std::move(h), std::move(f), std::move(ref));
}

ProblemData ProblemData::from_fields(SpectralField a, SpectralField h, SpectralField f,
                                     std::vector<double> f_refined) {
  const int R = power_grid_size(f.geom());
  const std::size_t n = f.geom().d_eff() == 1 ? R : static_cast<std::size_t>(R) * R;
  if (f_refined.size() != n) throw std::invalid_argument("from_fields: refined f has wrong size");
  return ProblemData(std::move(a), std::move(h), std::move(f), std::move(f_refined));
}

ProblemData ProblemData::resampled(const GeometryPtr& geometry) const {
  if (!a_expr_ || !h_expr_ || !f_expr_) throw std::logic_error("resampled: problem was not built from expressions");
  return from_expressions(geometry, *a_expr_, *h_expr_, *f_expr_);
}

void ProblemData::validate() const {
  std::string msg;
  if (!flags_.h_negative) msg += "h must be negative everywhere (max h = " + std::to_string(max_h_) + "); ";
  if (!flags_.f_minus_mass_positive) msg += "integral of f^- must be positive; ";
  if (!msg.empty()) throw HypothesisViolated(msg.substr(0, msg.size() - 2));
}

// ---------------------------------------------------------------------------

double quadratic_form(const SpectralField& u, const ProblemData& p) {
  require_same_geometry(u, p.a());
  double hu2 = 0.0;
  const auto us = u.samples();
  const auto hs = p.h().samples();
  for (std::size_t i = 0; i < us.size(); ++i) hu2 += hs[i] * us[i] * us[i];
  hu2 *= u.geom().quadrature_weight();
  const double a_term = p.a_is_zero() ? 0.0 : weighted_grad_sq_integral(p.a(), u);
  return laplacian_sq_integral(u) - a_term + hu2;
}

double power_integral(const SpectralField& u, const std::vector<double>& w, double q) {
  const auto ur = upsample(u, power_grid_size(u.geom()));
  if (!w.empty() && w.size() != ur.size()) throw std::invalid_argument("power_integral: weight size mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < ur.size(); ++j) {
    const double t = std::pow(std::abs(ur[j]), q);
    s += w.empty() ? t : w[j] * t;
  }
  return s / static_cast<double>(ur.size());
}

double lq_mass(const SpectralField& u, double q) { return power_integral(u, {}, q); }

namespace {

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string(what) + " is not finite");
  return v;
}

}  // namespace

double eval_F(const SpectralField& u, const ProblemData& p, double q) {
  return checked(quadratic_form(u, p) - power_integral(u, p.f_refined(), q), "F_q(u)");
}

double eval_G(const SpectralField& u, const ProblemData& p, double q) {
  return checked(quadratic_form(u, p) + power_integral(u, p.f_minus_refined(), q), "G_q(u)");
}

SpectralField power_term(const SpectralField& u, const std::vector<double>& w, double q) {
  const int R = power_grid_size(u.geom());
  std::vector<double> ur = upsample(u, R);
  if (!w.empty() && w.size() != ur.size()) throw std::invalid_argument("power_term: weight size mismatch");
  for (std::size_t j = 0; j < ur.size(); ++j) {
    const double x = ur[j];
    const double psi = x == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(x), q - 1.0), x);
    ur[j] = w.empty() ? psi : w[j] * psi;
  }
  return downsample_adjoint(u.geometry(), ur, R);
}

SpectralField linear_operator(const SpectralField& u, const ProblemData& p) {
  require_same_geometry(u, p.a());
  std::vector<double> hu(u.size());
  const auto us = u.samples();
  const auto hs = p.h().samples();
  for (std::size_t i = 0; i < hu.size(); ++i) hu[i] = hs[i] * us[i];
  SpectralField out = bilaplacian(u) + SpectralField::from_samples(u.geometry(), std::move(hu));
  if (!p.a_is_zero()) out = out + div_a_grad(p.a(), u);
  return out;
}

SpectralField grad_F(const SpectralField& u, const ProblemData& p, double q) {
  return linear_operator(u, p).combine(2.0, -q, power_term(u, p.f_refined(), q));
}

double el_residual(const SpectralField& u, const ProblemData& p, double q, double lambda, Normalization norm) {
  const double c = norm == Normalization::Variational ? q / 2.0 : 1.0;
  const SpectralField lin = linear_operator(u, p);
  SpectralField r = lin.axpy(-c, power_term(u, p.f_refined(), q));
  if (lambda != 0.0) r = r.axpy(-lambda, power_term(u, {}, q));
  return std::sqrt(l2_norm_sq(r));
}

double lagrange_multiplier(const SpectralField& u, const ProblemData& p, double q) {
  const SpectralField psi = power_term(u, {}, q);
  const double pp = l2_norm_sq(psi);
  if (pp == 0.0) return 0.0;
  const SpectralField e = linear_operator(u, p).axpy(-q / 2.0, power_term(u, p.f_refined(), q));
  return inner(e, psi) / pp;
}

double equation_factor(double q) { return std::pow(q / 2.0, 1.0 / (q - 2.0)); }

SpectralField to_equation_normalization(const SpectralField& v, double q) { return v.scaled(equation_factor(q)); }

EinsteinConstants einstein_preset(int n, double R) {
  if (n < 5) throw std::invalid_argument("einstein_preset: n must be >= 5");
  const double nd = n;
  const double alpha = (nd * nd - 2 * nd - 4) / (2 * nd * (nd - 1)) * R;
  const double a0 = (nd - 4) * (nd * nd - 4) / (16 * nd * (nd - 1) * (nd - 1)) * R * R;
  return {alpha, a0};
}

}  // namespace biharm
