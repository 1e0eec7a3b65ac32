#include <cmath>
#include <numbers>

#include "biharm/continuation.hpp"
#include "doctest.h"

using namespace biharm;

namespace {

constexpr double kPi = std::numbers::pi;

ProblemData bundled(int M) {
  return ProblemData::from_expressions(make_geometry(6, 1, M), "0.2", "-1", "cos(2*pi*x1) - 0.25");
}

}  // namespace

TEST_CASE("continuation schedule") {
  const auto qs = continuation_schedule(6.0, 8);
  REQUIRE(qs.size() == 8);
  CHECK(qs[0] == 4.0);
  CHECK(qs[1] == 5.0);
  CHECK(qs[7] == doctest::Approx(6.0 - 2.0 / 128).epsilon(1e-15));
  for (std::size_t j = 1; j < qs.size(); ++j) CHECK(qs[j] > qs[j - 1]);
  CHECK(qs.back() < 6.0);
}

TEST_CASE("critical residual on a manufactured solution") {
  auto g = make_geometry(6, 1, 64);
  const double N = g->critical_exponent();
  const double c0 = 2.0, eps = 0.5, h = -1.0, a = 0.2;
  const double k2 = 4 * kPi * kPi;
  auto fn = [&](double x) {
    const double uu = c0 + eps * std::cos(2 * kPi * x);
    return ((k2 * k2 - a * k2 + h) * eps * std::cos(2 * kPi * x) + h * c0) / std::pow(uu, N - 1);
  };
  const int R = power_grid_size(*g);
  std::vector<double> fr(R), fb(g->num_nodes());
  for (int j = 0; j < R; ++j) fr[j] = fn(static_cast<double>(j) / R);
  for (std::size_t j = 0; j < fb.size(); ++j) fb[j] = fn(g->coord(j, 0));
  auto p = ProblemData::from_fields(SpectralField::constant(g, a), SpectralField::constant(g, h),
                                    SpectralField::from_samples(g, fb), fr);
  std::vector<cplx> uc(g->num_nodes());
  uc[0] = c0;
  uc[1] = uc[g->num_nodes() - 1] = eps / 2;
  CHECK(critical_residual(SpectralField::from_coeffs(g, uc), p) <= 1e-10);
  CHECK(critical_residual(SpectralField::zero(g), p) == 0.0);
}

TEST_CASE("continuation to the critical exponent") {
  const auto p = bundled(128);
  const ContinuationTrace tr = continue_to_critical(p);
  CHECK(tr.N == 6.0);
  CHECK(tr.q0 == 4.0);
  REQUIRE(tr.steps.size() == 9);
  CHECK(tr.steps.back().q == 6.0);
  const HypothesisReport cert = certify(p, 4.0);
  REQUIRE(cert.chosen);
  for (const auto& st : tr.steps) {
    CAPTURE(st.q);
    CHECK(st.negative_energy);
    CHECK(st.mass_ok);
    CHECK(st.report.lq_mass_v <= st.l_q + 1e-8);
    CHECK(st.delta_ok);
    CHECK(st.report.int_f_power < 0.0);
    CHECK(st.report.residual <= 1e-6 * (1.0 + std::abs(st.report.energy)));
    CHECK(st.report.identity_gap <= 1e-6 * std::abs(st.report.energy));
    CHECK(st.report.lq_mass_u <= std::pow(st.q / 2, st.q / (st.q - 2)) * st.l_q * (1 + 1e-12));
    // l_q is the interval k1q for the frozen configuration.
    const auto& c = *cert.chosen;
    const IntervalConstants L = interval_constants(p, st.q, c.eta, c.sigma, c.eps, c.lambda_eta, c.A);
    CHECK(st.l_q == doctest::Approx(L.k1q).epsilon(1e-14));
    CHECK_FALSE(st.floor_applies);  // a = 0.2 > 0
  }
  // l_q decreases toward l_N here since the bracket base exceeds one.
  for (std::size_t j = 1; j < tr.steps.size(); ++j) CHECK(tr.steps[j].l_q < tr.steps[j - 1].l_q);
  CHECK(tr.l_N == doctest::Approx(tr.steps.back().l_q).epsilon(1e-14));
  CHECK(tr.l_N == doctest::Approx(cert.l_N_n_over_4).epsilon(1e-14));
  CHECK(tr.final_negative_moment);
  CHECK(tr.level_bound < 0.0);
  CHECK(tr.level_bound_ok);
  CHECK(tr.critical_residual <= 1e-6);
  // Energies vary slowly near N, and the iterates approach v_N.
  const auto n = tr.steps.size();
  CHECK(std::abs(tr.steps[n - 1].report.energy - tr.steps[n - 2].report.energy) <
        std::abs(tr.steps[1].report.energy - tr.steps[0].report.energy));
  const auto& d = tr.distance_to_final;
  CHECK(d[d.size() - 1] < d[d.size() - 2]);
  CHECK(d[d.size() - 2] < d[d.size() - 3]);

  const ContinuationTrace fine = continue_to_critical(bundled(256));
  CHECK(std::abs(fine.steps.back().report.energy - tr.steps.back().report.energy) <
        0.02 * std::abs(tr.steps.back().report.energy));
}

TEST_CASE("continuation with a floor and failure modes") {
  const auto p = ProblemData::from_expressions(make_geometry(6, 1, 64), "-0.1", "-1", "cos(2*pi*x1) - 0.25");
  std::vector<double> seen;
  ContinuationOptions opts;
  opts.steps = 3;
  opts.on_step = [&](const ContinuationStep& s) { seen.push_back(s.q); };
  const ContinuationTrace tr = continue_to_critical(p, opts);
  CHECK(seen.size() == 4);
  for (const auto& st : tr.steps) {
    CHECK(st.floor_applies);
    CHECK(st.floor_ok);
  }

  // A bogus H shrinks the ball below the minimizer: the best point sits on
  // the boundary, which is not a critical point.
  HypothesisReport cert = certify(p, 4.0);
  REQUIRE(cert.chosen);
  IntervalConstants L = *cert.chosen;
  L.H = 1e-6;
  opts.constants = L;
  CHECK_THROWS_AS(continue_to_critical(p, opts), NonConvergence);

  const auto bad = ProblemData::from_expressions(make_geometry(6, 1, 32), "0", "0.5", "cos(2*pi*x1)");
  CHECK_THROWS_AS(continue_to_critical(bad), HypothesisViolated);
}
