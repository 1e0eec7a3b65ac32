#include "biharm/continuation.hpp"

#include <cmath>
#include <sstream>

namespace biharm {

std::vector<double> continuation_schedule(double N, int steps) {
  const double q0 = 0.5 * (2.0 + N);
  std::vector<double> qs;
  for (int j = 0; j < steps; ++j) qs.push_back(N - (N - q0) * std::ldexp(1.0, -j));
  return qs;
}

double critical_residual(const SpectralField& u, const ProblemData& p) {
  return el_residual(u, p, p.geom().critical_exponent(), 0.0, Normalization::Equation);
}

ContinuationTrace continue_to_critical(const ProblemData& p, const ContinuationOptions& opts) {
  p.validate();
  if (opts.steps < 1) throw std::invalid_argument("continue_to_critical: need at least one step");
  ContinuationTrace tr;
  tr.N = p.geom().critical_exponent();
  tr.q0 = 0.5 * (2.0 + tr.N);

  IntervalConstants L;
  if (opts.constants) {
    L = *opts.constants;
  } else {
    const HypothesisReport cert = certify(p, tr.q0);
    if (!cert.chosen) throw HypothesisViolated("continue_to_critical: no admissible (eta, sigma, eps) configuration");
    L = *cert.chosen;
  }
  tr.sigma = L.sigma;
  tr.eta = L.eta;
  tr.C_sigma = L.C_sigma;
  tr.H = L.H;
  const double s = 1.0 - 2.0 * L.sigma * p.a_plus_sup();
  if (!(s > 0.0)) throw BadSigma("1 - 2 sigma ||a_+|| must be positive");

  std::vector<double> qs = continuation_schedule(tr.N, opts.steps);
  qs.push_back(tr.N);
  tr.l_N = l_bound(p, L.H, L.eta, tr.N / (tr.N - 2.0));

  std::vector<SpectralField> warm = opts.solve.warm;
  for (double q : qs) {
    const double l_q = l_bound(p, L.H, L.eta, q / (q - 2.0));
    FirstSolutionOptions so = opts.solve;
    so.l_q = l_q;
    so.warm = warm;
    int attempts = 1;
    std::optional<FirstSolution> sol;
    try {
      sol = first_solution(p, q, so);
    } catch (const NonConvergence&) {
      so.warm.clear();
      so.min.seed += 1;
      attempts = 2;
      sol = first_solution(p, q, so);
    }
    ContinuationStep st{q, l_q, sol->report};
    st.attempts = attempts;
    const CriticalPointReport& r = st.report;
    st.negative_energy = r.energy < 0.0;
    st.mass_ok = r.lq_mass_v <= st.l_q + opts.mass_tol;
    // Bound on the variational representative: F(v) < 0 and ||v||_q^q <= l_q.
    st.delta_sq = laplacian_sq_integral(r.v);
    st.delta_bound = (L.H * std::pow(st.l_q, 2.0 / q) + p.f_sup_abs() * st.l_q) / s;
    st.delta_ok = st.delta_sq <= st.delta_bound * (1.0 + 1e-12);
    st.floor_applies = p.min_a() <= 0.0;
    st.floor = (p.min_h() - p.sup_f_plus()) * std::max(st.l_q, 1.0);
    if (st.floor_applies) st.floor_ok = r.energy >= st.floor - 1e-12 * std::abs(st.floor);
    tr.steps.push_back(st);
    if (opts.on_step) opts.on_step(tr.steps.back());
    if (!st.delta_ok) {
      std::ostringstream msg;
      msg << "continue_to_critical: ||Delta v||^2 = " << st.delta_sq << " exceeds the bound " << st.delta_bound
          << " at q = " << q;
      throw DivergingNorms(msg.str());
    }
    warm = {r.v};
  }

  const CriticalPointReport& fin = tr.steps.back().report;
  tr.final_negative_moment = fin.int_f_power < 0.0;
  // Level bound: a constant of mass k inside the ball has energy at most half
  // the h-term once k^{1-2/N} int f >= int h / 2.
  double k = tr.l_N;
  if (p.int_f() < 0.0) k = std::min(k, std::pow(0.5 * p.int_h() / p.int_f(), tr.N / (tr.N - 2.0)));
  tr.level_mass = k;
  tr.level_bound = 0.5 * std::pow(k, 2.0 / tr.N) * p.int_h();
  tr.level_bound_ok = fin.energy <= tr.level_bound;
  tr.critical_residual = critical_residual(fin.u, p);
  for (std::size_t i = 0; i + 1 < tr.steps.size(); ++i)
    tr.distance_to_final.push_back(std::sqrt(l2_norm_sq(tr.steps[i].report.v - fin.v)));
  return tr;
}

}  // namespace biharm
