#include <cmath>
#include <numbers>
#include <random>

#include "biharm/problem.hpp"
#include "doctest.h"

using namespace biharm;

namespace {

constexpr double kPi = std::numbers::pi;

double rel(double a, double b) { return std::abs(a - b) / std::max({1e-300, std::abs(a), std::abs(b)}); }

ProblemData bundled(int M = 128) {
  return ProblemData::from_expressions(make_geometry(6, 1, M), "0.2", "-1", "cos(2*pi*x1) - 0.25");
}

}  // namespace

TEST_CASE("expression grammar") {
  auto g = make_geometry(6, 2, 16);
  const auto c = parse_coefficient("-1", g);
  for (double v : c.samples()) CHECK(v == -1.0);
  const auto s = parse_coefficient("sin(2*pi*x1)", g);
  CHECK(s.samples()[1] == doctest::Approx(std::sin(2 * kPi / 16)));
  CHECK(parse_coefficient("2 * (1 + x2) / 4", g).samples()[16] == doctest::Approx(0.5 * (1 + 1.0 / 16)));
  CHECK(parse_coefficient("abs(-3) + exp(0) - -1", g).samples()[0] == doctest::Approx(5.0));
  CHECK(parse_coefficient(".5e1", g).samples()[0] == doctest::Approx(5.0));

  auto pos_of = [&](const std::string& e) -> long {
    try {
      parse_coefficient(e, g);
    } catch (const ExpressionError& err) {
      return static_cast<long>(err.position());
    }
    return -1;
  };
  CHECK(pos_of("1 + ") == 4);
  CHECK(pos_of("sin(x1") == 6);
  CHECK(pos_of("foo(x1)") == 0);
  CHECK(pos_of("1 $ 2") == 2);
  CHECK(pos_of("1 / x1") == 2);  // x1 = 0 at the first node
  CHECK(pos_of("1 / (x1 + 1)") == -1);
  CHECK_THROWS_AS(parse_coefficient("x2", make_geometry(6, 1, 16)), ExpressionError);
}

TEST_CASE("f^- integral against adaptive quadrature") {
  // mpmath.quad of max(0.5 - cos(2 pi x), 0) split at the kinks, 40 digits.
  const double oracle = 0.608997781044229358088996582489818054032;
  auto p = ProblemData::from_expressions(make_geometry(6, 1, 128), "0", "-1", "cos(2*pi*x1) - 0.5");
  CHECK(std::abs(p.int_f_minus() - oracle) <= 1e-8);
  // Bundled coefficient, same oracle procedure.
  CHECK(std::abs(bundled().int_f_minus() - 0.4533098778445414637) <= 1e-8);
  // tests/oracles/negative_part_2d.py
  auto p2 = ProblemData::from_expressions(make_geometry(6, 2, 32), "0", "-1", "cos(2*pi*x1) + cos(2*pi*x2) - 0.5");
  CHECK(std::abs(p2.int_f_minus() - 0.70947634124526603236) <= 1e-8);
  for (std::size_t i = 0; i < p.f().size(); ++i) {
    CHECK(p.f_plus().samples()[i] - p.f_minus().samples()[i] == doctest::Approx(p.f().samples()[i]));
    CHECK(p.f_plus().samples()[i] * p.f_minus().samples()[i] == 0.0);
  }
}

TEST_CASE("hypothesis flags") {
  auto g = make_geometry(6, 1, 32);
  auto ok = ProblemData::from_expressions(g, "0", "-1", "cos(2*pi*x1)");
  CHECK(ok.hypotheses().h_negative);
  CHECK(ok.hypotheses().f_minus_mass_positive);
  CHECK(ok.hypotheses().f_positive_somewhere);
  CHECK_NOTHROW(ok.validate());
  auto bad_h = ProblemData::from_expressions(g, "0", "0.5", "cos(2*pi*x1)");
  CHECK_FALSE(bad_h.hypotheses().h_negative);
  CHECK_THROWS_AS(bad_h.validate(), HypothesisViolated);
  auto no_fminus = ProblemData::from_expressions(g, "0", "-1", "1");
  CHECK_FALSE(no_fminus.hypotheses().f_minus_mass_positive);
  CHECK_THROWS_AS(no_fminus.validate(), HypothesisViolated);
  CHECK_THROWS_AS(ExponentPair::make(2.0, *g), HypothesisViolated);
  CHECK_THROWS_AS(ExponentPair::make(6.5, *g), HypothesisViolated);
  CHECK_FALSE(ExponentPair::make(6.0, *g).subcritical);
  CHECK(ExponentPair::make(2.5, *g).subcritical);
}

TEST_CASE("energy examples") {
  const auto p = bundled();
  const auto g = p.geometry();
  CHECK(eval_F(SpectralField::zero(g), p, 2.5) == 0.0);
  for (double q : {2.3, 2.5, 4.0, 6.0}) {
    for (double k : {0.01, 1.0, 300.0}) {
      const double c = std::pow(k, 1.0 / q);
      const double expect = std::pow(k, 2.0 / q) * p.int_h() - k * p.int_f();
      CHECK(rel(eval_F(SpectralField::constant(g, c), p, q), expect) <= 1e-12);
    }
  }
  auto q0 = ProblemData::from_expressions(g, "0", "-1", "0");
  const auto u = parse_coefficient("1.4142135623730951*sin(2*pi*x1)", g);
  for (double q : {2.5, 5.0}) CHECK(rel(eval_F(u, q0, q), std::pow(2 * kPi, 4) - 1.0) <= 1e-12);
  // G with f >= 0 reduces to Q.
  auto fpos = ProblemData::from_expressions(g, "0.3", "-1", "2 + cos(2*pi*x1)");
  CHECK(eval_G(u, fpos, 3.0) == doctest::Approx(quadratic_form(u, fpos)).epsilon(1e-14));
  CHECK(eval_G(SpectralField::constant(g, 1.0), p, 3.0) == doctest::Approx(p.int_h() + p.int_f_minus()).epsilon(1e-4));
  CHECK(rel(eval_G(SpectralField::constant(g, 1.0), p, 3.0),
            p.int_h() + [&] {
              double s = 0;
              for (double v : p.f_minus_refined()) s += v;
              return s / static_cast<double>(p.f_minus_refined().size());
            }()) <= 1e-14);
}

TEST_CASE("F/G decomposition, evenness and scaling") {
  const auto p = bundled();
  std::mt19937_64 rng(21);
  for (int t = 0; t < 20; ++t) {
    const auto u = random_smooth_field(p.geometry(), 12, rng).scaled(3.0);
    for (double q : {2.3, 3.0, 6.0}) {
      const double F = eval_F(u, p, q);
      CHECK(rel(F, eval_G(u, p, q) - power_integral(u, p.f_plus_refined(), q)) <= 1e-10);
      CHECK(rel(F, eval_F(-u, p, q)) <= 1e-13);
      const double tt = -1.7;
      const double lhs = eval_F(u.scaled(tt), p, q);
      const double rhs = tt * tt * quadratic_form(u, p) - std::pow(std::abs(tt), q) * power_integral(u, p.f_refined(), q);
      CHECK(rel(lhs, rhs) <= 1e-10);
    }
  }
}

TEST_CASE("gradient examples") {
  const auto p = bundled(64);
  const auto g = p.geometry();
  const auto z = grad_F(SpectralField::zero(g), p, 2.5);
  for (double v : z.samples()) CHECK(v == 0.0);
  auto cst = ProblemData::from_expressions(g, "0.7", "-2", "1.5");
  const double c = -1.3;
  for (double q : {2.5, 6.0}) {
    const auto gr = grad_F(SpectralField::constant(g, c), cst, q);
    const double expect = 2 * (-2) * c - q * 1.5 * c * std::pow(std::abs(c), q - 2);
    for (double v : gr.samples()) CHECK(v == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("gradient against centered differences") {
  for (int d = 1; d <= 2; ++d) {
    auto g = make_geometry(6, d, d == 1 ? 64 : 16);
    auto p = ProblemData::from_expressions(g, d == 1 ? "0.2 + 0.1*sin(2*pi*x1)" : "0.2*cos(2*pi*x2)", "-1 - 0.3*cos(2*pi*x1)",
                                           "cos(2*pi*x1) - 0.25");
    std::mt19937_64 rng(100 + d);
    for (double q : {2.3, 2.5, 3.0, 6.0}) {
      double worst = 0.0;
      for (int t = 0; t < 10; ++t) {
        const auto u = random_smooth_field(g, d == 1 ? 10 : 5, rng).scaled(2.0);
        const auto phi = random_smooth_field(g, d == 1 ? 10 : 5, rng);
        const double h = 1e-5;
        const double fd = (eval_F(u.axpy(h, phi), p, q) - eval_F(u.axpy(-h, phi), p, q)) / (2 * h);
        const double an = inner(grad_F(u, p, q), phi);
        worst = std::max(worst, std::abs(fd - an) / std::abs(an));
      }
      CHECK(worst <= 1e-5);
    }
  }
}

TEST_CASE("manufactured solutions") {
  auto g = make_geometry(6, 1, 64);
  const double c0 = 2.0, eps = 0.5, h = -1.0, a = 0.3, q = 2.5;
  const double k2 = 4 * kPi * kPi;
  // u = c0 + eps cos(2 pi x) > 0 and f = L u / u^{q-1} sampled exactly on the power grid.
  auto fn = [&](double x) {
    const double uu = c0 + eps * std::cos(2 * kPi * x);
    const double lu = (k2 * k2 - a * k2 + h) * eps * std::cos(2 * kPi * x) + h * c0;
    return lu / std::pow(uu, q - 1);
  };
  const int R = power_grid_size(*g);
  std::vector<double> fr(R), fb(g->num_nodes());
  for (int j = 0; j < R; ++j) fr[j] = fn(static_cast<double>(j) / R);
  for (std::size_t j = 0; j < fb.size(); ++j) fb[j] = fn(g->coord(j, 0));
  auto p = ProblemData::from_fields(SpectralField::constant(g, a), SpectralField::constant(g, h),
                                    SpectralField::from_samples(g, fb), fr);
  // Exact coefficients: sampled cosines carry roundoff in every mode, which
  // Delta^2 amplifies by up to |2 pi M/2|^4.
  std::vector<cplx> uc(g->num_nodes());
  uc[0] = c0;
  uc[1] = uc[g->num_nodes() - 1] = eps / 2;
  const auto u = SpectralField::from_coeffs(g, uc);
  CHECK(el_residual(u, p, q, 0.0, Normalization::Equation) <= 1e-10);
  // The same field is a Variational critical point of F_q after rescaling.
  const auto v = u.scaled(1.0 / equation_factor(q));
  CHECK(el_residual(v, p, q, 0.0, Normalization::Variational) <= 1e-10);
  CHECK(std::sqrt(l2_norm_sq(grad_F(v, p, q))) <= 1e-9);
  CHECK(std::abs(lagrange_multiplier(v, p, q)) <= 1e-10);
  CHECK(rel(eval_F(v, p, q), (q / 2 - 1) * power_integral(v, p.f_refined(), q)) <= 1e-10);
  CHECK(el_residual(SpectralField::zero(g), p, q, 0.7) == 0.0);
}

TEST_CASE("Einstein preset") {
  CHECK(einstein_preset(6, 0.0).alpha == 0.0);
  CHECK(einstein_preset(6, 0.0).a0 == 0.0);
  CHECK(einstein_preset(6, -1.0).alpha == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
  CHECK(einstein_preset(6, -1.0).a0 == doctest::Approx(64.0 / 2400.0).epsilon(1e-15));
  for (double R : {-3.0, -0.1, 0.5, 7.0}) CHECK(einstein_preset(9, R).a0 >= 0.0);
  CHECK_THROWS_AS(einstein_preset(4, 1.0), std::invalid_argument);
  // a = -alpha makes div(a grad u) equal alpha Delta u.
  auto g = make_geometry(6, 1, 32);
  const auto e = einstein_preset(6, -2.0);
  std::mt19937_64 rng(1);
  const auto u = random_smooth_field(g, 6, rng);
  const auto lhs = div_a_grad(SpectralField::constant(g, -e.alpha), u);
  const auto rhs = laplacian(u).scaled(e.alpha);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(lhs.samples()[i] == doctest::Approx(rhs.samples()[i]).epsilon(1e-10));
  auto pe = ProblemData::from_fields(SpectralField::constant(g, -e.alpha), SpectralField::constant(g, e.a0),
                                     SpectralField::constant(g, -1.0));
  CHECK_FALSE(pe.hypotheses().h_negative);
}
