#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "biharm/certifier.hpp"
#include "dense_oracle.hpp"
#include "doctest.h"

using namespace biharm;

namespace {

// tests/oracles/sobolev_constant.py (mpmath, 50 digits).
constexpr std::pair<int, double> kK2InvSq[] = {
    {5, 102.38327344058293488}, {6, 247.28444736616020538},  {7, 431.5326646786595556},
    {8, 653.82471182644695926}, {9, 913.53384477999401398},  {10, 1210.3236298262270581},
    {11, 1543.9981687600297122}, {12, 1914.4360194261035053},
};

ProblemData bundled(int M = 128) {
  return ProblemData::from_expressions(make_geometry(6, 1, M), "0.2", "-1", "cos(2*pi*x1) - 0.25");
}

}  // namespace

TEST_CASE("sharp Sobolev constant") {
  for (auto [n, v] : kK2InvSq) {
    CHECK(std::abs(sobolev_k2_inv_sq(n) - v) <= 1e-12 * v);
    CHECK(sobolev_k2(n) > 0.0);
    CHECK(std::isfinite(sobolev_k2(n)));
  }
  // n = 8 closed form.
  CHECK(sobolev_k2_inv_sq(8) == doctest::Approx(1920 * std::numbers::pi * std::numbers::pi * std::sqrt(6.0 / 5040.0)).epsilon(1e-14));
  CHECK_THROWS_AS(sobolev_k2(4), std::invalid_argument);
}

TEST_CASE("interpolation constant") {
  auto g = make_geometry(6, 1, 64);
  const double k2 = 4 * std::numbers::pi * std::numbers::pi;
  for (double sigma : {1e-4, 1e-3, 0.01, 1.0 / (8 * std::numbers::pi * std::numbers::pi), 0.1, 1.0}) {
    const double C = interp_constant(sigma, *g);
    CHECK(C >= 0.0);
    CHECK(C <= 1.0 / (16 * sigma) + 1e-15);
    for (double lam : g->laplacian_symbols()) CHECK(lam <= 2 * sigma * lam * lam + 2 * C + 1e-9 * (1 + lam));
    if (sigma >= 1.0 / (8 * std::numbers::pi * std::numbers::pi))
      CHECK(C <= std::max(0.0, (k2 - 2 * sigma * k2 * k2) / 2) + 1e-15);
  }
  CHECK_THROWS_AS(interp_constant(0.0, *g), BadSigma);
  std::mt19937_64 rng(2);
  const double sigma = 0.002;
  const double C = interp_constant(sigma, *g);
  for (int t = 0; t < 100; ++t) {
    const auto u = random_smooth_field(g, 30, rng, 0.3);
    CHECK(grad_sq_integral(u) <= 2 * sigma * laplacian_sq_integral(u) + 2 * C * l2_norm_sq(u) + 1e-10);
  }
}

TEST_CASE("lower bound on F over the L^q sphere") {
  const auto p = bundled(64);
  const double sigma = 0.25 / p.a_plus_sup();
  const double C = interp_constant(sigma, p.geom());
  std::mt19937_64 rng(4);
  for (double q : {2.5, 4.0}) {
    for (int t = 0; t < 30; ++t) {
      auto u = random_smooth_field(p.geometry(), 12, rng);
      const double k = std::exp(std::uniform_real_distribution<double>(-3, 6)(rng));
      u = u.scaled(std::pow(k / lq_mass(u, q), 1.0 / q));
      double fmax = -1e300;
      for (double v : p.f_refined()) fmax = std::max(fmax, v);
      const double bound = (1 - 2 * sigma * p.a_plus_sup()) * laplacian_sq_integral(u) +
                           (p.min_h() - 2 * C * p.a_plus_sup()) * std::pow(k, 2 / q) - k * fmax;
      CHECK(eval_F(u, p, q) >= bound - 1e-9 * (1 + std::abs(bound)));
    }
  }
}

TEST_CASE("lambda_af trivial cases") {
  auto g = make_geometry(6, 1, 64);
  auto fpos = ProblemData::from_expressions(g, "0", "-1", "1 + 0.5*cos(2*pi*x1)");
  const auto r = lambda_af(fpos);
  CHECK(std::abs(r.value) <= 1e-9);
  CHECK(r.converged);
  auto fneg = ProblemData::from_expressions(g, "0", "-1", "-1 - 0.5*cos(2*pi*x1)");
  const auto e = lambda_af(fneg);
  CHECK(e.empty);
  CHECK(std::isinf(e.value));
}

TEST_CASE("lambda_af against the dense masked eigensolve") {
  auto g = make_geometry(6, 1, 64);
  for (const char* f : {"cos(2*pi*x1)", "cos(2*pi*x1) - 0.5", "sin(2*pi*x1) + 0.6"}) {
    auto p = ProblemData::from_expressions(g, "0", "-1", f);
    const auto mask = f_minus_mask(p);
    const double ref = oracle::masked_bilaplacian_min(64, mask);
    const auto r = lambda_af(p);
    INFO(f);
    CHECK(r.converged);
    CHECK(std::abs(r.unsigned_value - ref) <= 1e-4 * ref);
    CHECK(std::abs(r.value - ref) <= 1e-4 * ref);
    CHECK(r.eigenvector_one_signed);
  }
}

TEST_CASE("lambda_af on a two-component admissible set") {
  // The spectral bi-Laplacian couples the two free intervals weakly, so the
  // lowest masked eigenvector is the odd combination. The cone infimum is
  // then the single-interval value, strictly above the unsigned one.
  auto g = make_geometry(6, 1, 64);
  auto p = ProblemData::from_expressions(g, "0", "-1", "cos(4*pi*x1) + 0.3");
  const auto r = lambda_af(p);
  const double ref = oracle::masked_bilaplacian_min(64, f_minus_mask(p));
  CHECK(std::abs(r.unsigned_value - ref) <= 1e-4 * ref);
  CHECK_FALSE(r.eigenvector_one_signed);
  CHECK(r.value > r.unsigned_value);
  CHECK(r.value - r.unsigned_value <= 1e-3 * r.unsigned_value);
}

TEST_CASE("lambda_af invariances and monotonicity") {
  auto g = make_geometry(6, 1, 64);
  auto p1 = ProblemData::from_expressions(g, "0.1", "-1", "cos(2*pi*x1) - 0.2");
  auto p2 = ProblemData::from_expressions(g, "0.1", "-1", "2*cos(2*pi*x1) - 0.4");
  auto p3 = ProblemData::from_expressions(g, "0.3 + 0.1*cos(2*pi*x1)", "-1", "cos(2*pi*x1) - 0.2");
  const double l1 = lambda_af(p1).value;
  CHECK(lambda_af(p2).value == doctest::Approx(l1).epsilon(1e-8));
  CHECK(lambda_af(p3).value <= l1 + 1e-8 * l1);
  // Shrinking {f >= 0} raises lambda_af.
  double prev = 0.0;
  for (double c : {0.0, 0.3, 0.6, 0.9}) {
    auto p = ProblemData::from_expressions(g, "0", "-1", "cos(2*pi*x1) - " + std::to_string(c));
    const double v = lambda_af(p).value;
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("lambda_{a,f,eta,q}") {
  const auto p = bundled(64);
  const auto laf = lambda_af(p);
  std::optional<SpectralField> warm = laf.minimizer;
  double prev = std::numeric_limits<double>::infinity();
  for (double eta : {0.001, 0.01, 0.02, 0.1, 0.5}) {
    const auto ineq = lambda_af_eta_q(p, eta, 2.5, EtaConstraint::Inequality, warm);
    const auto eq = lambda_af_eta_q(p, eta, 2.5, EtaConstraint::Equality, ineq.minimizer);
    INFO(eta);
    CHECK(ineq.value <= prev + 1e-9 * prev);
    CHECK(ineq.value <= laf.value * (1 + 1e-9));
    CHECK(ineq.moment_ratio <= eta * (1 + 1e-8));
    CHECK(std::abs(eq.moment_ratio - eta) <= 1e-8 * eta);
    CHECK(std::abs(eq.value - ineq.value) <= 1e-6 * ineq.value);
    CHECK(std::abs(lq_mass(*ineq.minimizer, 2.5) - 1.0) <= 1e-12);
    prev = ineq.value;
    warm = ineq.minimizer;
  }
  CHECK_THROWS_AS(lambda_af_eta_q(p, 5.0, 2.5), Infeasible);
  auto allneg = ProblemData::from_expressions(p.geometry(), "0", "-1", "-1");
  CHECK_THROWS_AS(lambda_af_eta_q(allneg, 0.5, 2.5), Infeasible);
}

TEST_CASE("interval constants") {
  const auto p = bundled(64);
  const double sigma = 0.25 / p.a_plus_sup();
  const auto c = interval_constants(p, 4.0, 0.1, sigma, 0.1, 500.0, 1.0);
  CHECK(c.k2q / c.k1q == doctest::Approx(4.0).epsilon(1e-14));
  // Independent recomputation of b, mu, k1.
  const double s = 1 - 2 * sigma * 0.2;
  const double Cs = interp_constant(sigma, p.geom());
  const double H = 1 + 2 * 0.2 * Cs;
  const double K2sq = 1 / 247.28444736616020538;
  const double b = s * 499 / ((499 + H) * K2sq * 1.1 + s * 1.0);
  CHECK(c.b == doctest::Approx(b).epsilon(1e-12));
  CHECK(c.mu == doctest::Approx(std::min(b, H)).epsilon(1e-14));
  CHECK(c.k1q == doctest::Approx(std::pow(2 * H / (0.1 * p.int_f_minus()), 2.0)).epsilon(1e-12));
  CHECK(c.C_thm == doctest::Approx(c.mu * 0.1 / (8 * H)).epsilon(1e-14));
  // a = 0 reduces the bracket to ||h||.
  auto p0 = ProblemData::from_expressions(p.geometry(), "0", "-2", "cos(2*pi*x1)");
  const auto c0 = interval_constants(p0, 3.0, 0.5, 1.0, 0.01, 10.0, 2.0);
  CHECK(c0.H == 2.0);
  CHECK(c0.b == doctest::Approx(8.0 / ((8.0 + 2.0) * K2sq * 1.01 + 2.0)).epsilon(1e-12));
  const auto ci = interval_constants(p0, 3.0, 0.5, 1.0, 0.01, std::numeric_limits<double>::infinity(), 2.0);
  CHECK(ci.b == doctest::Approx(1.0 / (K2sq * 1.01)).epsilon(1e-12));
  CHECK_THROWS_AS(interval_constants(p0, 3.0, 0.5, 1.0, 0.01, 1.5, 2.0), NonPositiveEps0);
  CHECK_THROWS_AS(interval_constants(p, 3.0, 0.5, 5.0, 0.01, 10.0, 2.0), BadSigma);
  // Exponent limit q/(q-2) -> n/4 as q -> N.
  const double N = p.geom().critical_exponent();
  CHECK(N / (N - 2) == doctest::Approx(6.0 / 4.0));
}

TEST_CASE("remainder surrogate") {
  auto g = make_geometry(6, 1, 32);
  RemainderOptions o;
  o.probes = 100;
  const auto r = sobolev_remainder(g, 0.1, o);
  CHECK(r.value >= 1.0 - 1e-12);  // constants give exactly 1
  CHECK(r.probes > 100);
}

TEST_CASE("certify examples") {
  auto g = make_geometry(6, 1, 64);
  CertifyOptions o;
  o.remainder.probes = 50;
  SUBCASE("f < 0 everywhere") {
    auto p = ProblemData::from_expressions(g, "0", "-1", "-1");
    const auto r = certify(p, 2.5, o);
    CHECK(std::isinf(r.lambda_af));
    CHECK(r.cond1_holds);
    CHECK(r.cond2_holds);
    CHECK_FALSE(r.cond3_holds);
  }
  SUBCASE("bundled") {
    auto p = bundled(64);
    const auto r = certify(p, 2.5, o);
    CHECK(r.cond1_holds);
    CHECK(r.cond3_holds);
    CHECK(r.ratio == doctest::Approx(0.75 / 0.4533098778445414637).epsilon(1e-8));
    REQUIRE(r.chosen);
    CHECK(r.C_thm <= 0.5 / 8 + 1e-15);
    CHECK_FALSE(r.cond2_holds);
    for (std::size_t i = 1; i < r.lambda_eta.size(); ++i) CHECK(r.lambda_eta[i].second <= r.lambda_eta[i - 1].second);
    CHECK(r.measure_bound_holds);
    CHECK(r.l_N_n_over_4 > r.l_N_4_over_n);
  }
  SUBCASE("sup f <= 0") {
    auto p = ProblemData::from_expressions(g, "0", "-1", "-1 - cos(2*pi*x1)");
    CHECK_FALSE(certify(p, 2.5, o).cond3_holds);
  }
}
