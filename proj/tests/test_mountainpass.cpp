#include <cmath>
#include <numbers>

#include "biharm/mountainpass.hpp"
#include "doctest.h"

using namespace biharm;

namespace {

// tests/oracles/mountain_pass_toy.py.
constexpr double kToyMin[] = {1.425384441082148864769720277799295832538, 0.003711444715814323534872898223938376994456};
constexpr double kToySaddle = 1529.168190713821748796457621974660738176;

SpectralField cosine_field(const GeometryPtr& g, double c0, double c1) {
  std::vector<double> s(g->num_nodes());
  for (std::size_t j = 0; j < s.size(); ++j)
    s[j] = c0 + c1 * std::cos(2.0 * std::numbers::pi * static_cast<double>(j) / g->grid_size());
  return SpectralField::from_samples(g, std::move(s));
}

MuCurve synthetic(std::vector<double> k) {
  MuCurve c;
  c.q = 3.0;
  for (double x : k) c.mu.push_back(-(x - 1.0) * (x - 1.0) + 0.5);
  c.k = std::move(k);
  return c;
}

}  // namespace

TEST_CASE("zeros of a synthetic curve") {
  std::vector<double> k;
  for (int i = 0; i <= 40; ++i) k.push_back(0.05 * i);
  const MuZeros z = find_mu_zeros(synthetic(k));
  CHECK(std::abs(z.l1 - (1.0 - std::sqrt(0.5))) <= 1e-4);
  CHECK(std::abs(z.l2 - (1.0 + std::sqrt(0.5))) <= 1e-4);
  CHECK(std::abs(z.l_o - 1.0) <= 1e-4);
  CHECK(z.mu_lo == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(z.l1 < z.l_o);
  CHECK(z.l_o < z.l2);

  // Geometric grid goes through the log-k interpolant.
  std::vector<double> g;
  for (int i = 0; i <= 60; ++i) g.push_back(0.02 * std::pow(100.0, i / 60.0));
  const MuZeros zg = find_mu_zeros(synthetic(g));
  CHECK(std::abs(zg.l1 - (1.0 - std::sqrt(0.5))) <= 1e-4);
  CHECK(std::abs(zg.l2 - (1.0 + std::sqrt(0.5))) <= 1e-4);

  MuCurve flat;
  flat.k = {1, 2, 3, 4};
  flat.mu = {-1, -2, -3, -4};
  CHECK_THROWS_AS(find_mu_zeros(flat), ShapeNotFound);
}

TEST_CASE("mountain pass on a two-mode subspace") {
  const auto g = make_geometry(6, 1, 16);
  const auto p = ProblemData::from_expressions(g, "0", "-1", "cos(2*pi*x1) - 0.25");
  const SpectralField cosine = cosine_field(g, 0.0, 1.0);
  MountainPassOptions opts;
  opts.min.subspace = [g, cosine](const SpectralField& u) {
    return cosine_field(g, integral(u), 2.0 * inner(u, cosine));
  };
  const SpectralField u1 = cosine_field(g, kToyMin[0], kToyMin[1]);
  const SpectralField u2 = cosine_field(g, 30.0, 10.0);
  const MountainPassResult r = mountain_pass(p, 4.0, u1, u2, opts);
  CHECK(std::abs(r.nu - kToySaddle) <= 1e-3 * kToySaddle);
  CHECK(r.path_max >= r.nu * (1.0 - 1e-3));
  CHECK(r.report.int_f_power > 0.0);
  CHECK(r.report.identity_gap <= 1e-6 * r.nu);
  const SpectralField& v = r.report.v;
  CHECK(integral(v) == doctest::Approx(11.90074161270074298).epsilon(1e-5));
  CHECK(2.0 * inner(v, cosine) == doctest::Approx(2.027062694700757906).epsilon(1e-5));
}

TEST_CASE("mountain pass on the bundled example") {
  const auto p = ProblemData::from_expressions(make_geometry(6, 1, 64), "0.2", "-1", "cos(2*pi*x1) - 0.25");
  const double q = 2.5;
  const MuCurve c = trace_mu_curve(p, q, 1.0, 1e16, 48);
  const MuZeros z = find_mu_zeros(c);
  REQUIRE(c.notes.at_l1);
  REQUIRE(c.notes.at_l2);
  const SpectralField u1 = c.notes.at_l1->v, u2 = c.notes.at_l2->v;
  const MountainPassResult r = mountain_pass(p, q, u1, u2);

  CHECK(r.nu > 0.0);
  CHECK(r.nu >= z.mu_lo - 1e-8 * (1.0 + z.mu_lo));
  CHECK(r.report.int_f_power > 0.0);
  CHECK(r.report.identity_gap <= 1e-6 * r.nu);
  CHECK(r.report.residual <= 1e-6 * (1.0 + r.nu));
  CHECK(r.grad_norm <= 1e-6 * (1.0 + r.nu));
  // Deformation steps never raise the maximum; only reparameterization may.
  for (std::size_t i = 1; i < r.max_history.size(); ++i) {
    const bool after_reparam =
        std::find(r.reparam_after.begin(), r.reparam_after.end(), static_cast<int>(i) - 1) != r.reparam_after.end();
    if (!after_reparam) CHECK(r.max_history[i] <= r.max_history[i - 1]);
  }
  for (const auto& prof : r.profiles) {
    CHECK(prof.front() == eval_F(u1, p, q));
    CHECK(prof.back() == eval_F(u2, p, q));
  }
  // Distinct from the negative-energy solution.
  const FirstSolution s = first_solution(p, q);
  CHECK(s.report.energy < 0.0);
  CHECK(l2_norm_sq(r.report.v - s.report.v) > 0.0);
}

TEST_CASE("mountain pass without a hump collapses") {
  const auto p = ProblemData::from_expressions(make_geometry(6, 1, 16), "0", "-1", "0");
  const SpectralField u1 = SpectralField::constant(p.geometry(), 1.0);
  const SpectralField u2 = SpectralField::constant(p.geometry(), 3.0);
  MountainPassOptions opts;
  opts.min.mode_cap = 1;
  CHECK_THROWS_AS(mountain_pass(p, 3.0, u1, u2, opts), Collapse);
}
