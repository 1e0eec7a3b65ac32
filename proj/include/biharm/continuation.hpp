#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "biharm/minimizer.hpp"

namespace biharm {

struct ContinuationStep {
  double q = 0;
  double l_q = 0;
  CriticalPointReport report;
  bool negative_energy = false;
  bool mass_ok = false;         // ||v_q||_q^q <= l_q + mass_tol
  double delta_sq = 0;          // ||Delta v_q||_2^2
  double delta_bound = 0;       // [(2||a_+||C(sigma) + ||h||) l_q^{2/q} + ||f|| l_q] / (1 - 2 sigma ||a_+||)
  bool delta_ok = false;
  bool floor_applies = false;   // min a <= 0
  double floor = 0;             // (min h - max f^+) max(l_q, 1)
  bool floor_ok = true;
  int attempts = 1;
};

struct ContinuationOptions {
  int steps = 8;  // subcritical exponents before the final solve at q = N
  FirstSolutionOptions solve;
  double mass_tol = 1e-8;
  /// sigma and eta for the whole schedule; default from certify() at q0.
  std::optional<IntervalConstants> constants;
  /// Called after each accepted step, e.g. to flush partial output.
  std::function<void(const ContinuationStep&)> on_step;
};

struct ContinuationTrace {
  double N = 0, q0 = 0;
  double sigma = 0, eta = 0, H = 0, C_sigma = 0;
  std::vector<ContinuationStep> steps;  // last entry is q = N
  double l_N = 0;
  bool final_negative_moment = false;  // int f|v_N|^N < 0
  double level_mass = 0;               // mass k used in the level bound
  double level_bound = 0;              // k^{2/N} int h / 2
  bool level_bound_ok = false;         // F_N(v_N) <= level_bound
  double critical_residual = 0;
  std::vector<double> distance_to_final;  // ||v_{q_j} - v_N||_2 per subcritical step
};

/// q_j = N - (N - q0) 2^{-j}, j = 0..steps-1, with q0 = (2 + N)/2.
std::vector<double> continuation_schedule(double N, int steps);

/// Warm-started negative-energy solves along the schedule and at q = N, with
/// the a priori mass and H_2 bounds checked at every step. A failed step is
/// retried once from a fresh multistart. Throws HypothesisViolated,
/// NonConvergence, and DivergingNorms when the Delta bound fails.
ContinuationTrace continue_to_critical(const ProblemData& p, const ContinuationOptions& opts = {});

/// Residual of the critical equation for u in equation normalization.
double critical_residual(const SpectralField& u, const ProblemData& p);

}  // namespace biharm
