#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "biharm/certifier.hpp"
#include "biharm/problem.hpp"

namespace biharm {

struct MinimizeOptions {
  int max_iter = 20000;
  /// Stop when the tangent L^2 gradient of the normalized energy is below
  /// tol * (1 + |energy|).
  double tol = 1e-9;
  int mode_cap = 0;  // restrict iterates to modes with |m_i| <= cap; 0 = all
  /// Optional orthogonal projector onto a subspace, applied after mode_cap to
  /// seeds and search directions.
  std::function<SpectralField(const SpectralField&)> subspace;
  int nonmonotone = 10;
  int random_starts = 3;
  std::uint64_t seed = 1;
};

struct SphereMinimum {
  SpectralField v;
  double k = 0;
  double mu = 0;
  // Least-squares multiplier of the variational form and el_residual(v,
  // lambda). Under mode_cap or subspace both refer to the restricted problem.
  double lambda = 0;
  double residual = 0;
  int iterations = 0;
  bool converged = false;
  int seed_index = -1;  // multistart winner, -1 for a plain warm start
};

/// Minimizes F_q on {||u||_q^q = k} by preconditioned Riemannian gradient
/// descent with Barzilai-Borwein steps and radial retraction. Non-convergence
/// is reported through `converged`, never thrown. Throws std::invalid_argument
/// for k <= 0 or a zero init.
SphereMinimum minimize_on_sphere(const ProblemData& p, double q, double k, const SpectralField& init,
                                 const MinimizeOptions& opts = {});

/// Deterministic seed shapes: constant; 0.2 + bump and 1 - 0.8 bump with a
/// Gaussian bump at the maximum of f; 1 +- 0.5 cos(2 pi x1); then
/// `random_starts` random smooth fields drawn from `seed`.
std::vector<SpectralField> multistart_seeds(const ProblemData& p, const MinimizeOptions& opts);

/// Best of the seed shapes and any extra warm starts (rescaled to mass k).
/// Ties on mu go to the earlier seed; warm starts come after the seeds.
SphereMinimum minimize_multistart(const ProblemData& p, double q, double k, const MinimizeOptions& opts,
                                  const std::vector<SpectralField>& warm = {});

/// Applies mode_cap and the subspace projector.
SpectralField restrict_to(const SpectralField& u, const MinimizeOptions& opts);

struct MuAnnotations {
  std::optional<SphereMinimum> at_kq;  // interior negative minimum (lambda = 0)
  std::optional<SphereMinimum> at_l1;  // zero crossing into the hump
  std::optional<SphereMinimum> at_l2;  // zero crossing out of it
  std::optional<SphereMinimum> at_lo;  // top of the hump
  bool negative_start = false;         // mu < 0 at the three smallest k
  // Interval check: mu_k >= mu_hat k^{2/q} / 2 on [k1q, k2q].
  std::optional<double> I_lo, I_hi, mu_hat;
  std::optional<double> I_worst_margin;  // min of mu - mu_hat k^{2/q}/2 over checked points
  bool I_bound_holds = false;
  int I_points = 0;
};

struct MuCurve {
  double q = 0;
  std::vector<double> k, mu, lagrange, residual;
  std::vector<int> iterations, winner;
  std::vector<bool> converged;
  std::vector<SpectralField> minimizers;
  MuAnnotations notes;
};

struct MuCurveOptions {
  MinimizeOptions min;
  bool refine = true;
  double k_rel_tol = 1e-10;  // bracket width for zero and stationary-point refinement
  double zero_tol = 1e-9;    // |mu| <= zero_tol * k^{2/q} (1 + ||h||) ends zero refinement
  std::optional<IntervalConstants> interval;
};

/// Refines, between two minimizers with multipliers of opposite sign, the
/// mass where the multiplier vanishes; the result is a free critical point.
SphereMinimum refine_stationary_mass(const ProblemData& p, double q, const SphereMinimum& a, const SphereMinimum& b,
                                     const MuCurveOptions& opts = {});

/// Geometric k grid, forward sweep (multistart plus the previous minimizer)
/// and backward sweep (next minimizer), pointwise minimum kept.
MuCurve trace_mu_curve(const ProblemData& p, double q, double k_min, double k_max, int n_points,
                       const MuCurveOptions& opts = {});

struct CriticalPointReport {
  SpectralField u;  // equation normalization
  SpectralField v;  // variational representative
  double q = 0;
  double energy = 0;         // F_q(v)
  double residual = 0;       // el_residual(u, 0, Equation)
  double int_f_power = 0;    // int f|v|^q
  double identity_gap = 0;   // |F_q(v) - (q/2 - 1) int f|v|^q|
  double h2_norm = 0;        // ||u||_{H_2}
  double lq_mass_v = 0;      // ||v||_q^q
  double lq_mass_u = 0;      // ||u||_q^q
  double lambda = 0;         // multiplier of v on its own sphere, ~0 at a free critical point
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;   // f == 0 on the grid
};

/// Builds the report for a free critical point v of F_q.
CriticalPointReport make_report(const SpectralField& v, const ProblemData& p, double q);
/// ||u||_{H_2}^2 = ||u||^2 + ||grad u||^2 + ||grad^2 u||^2.
double h2_norm(const SpectralField& u);

struct FreeDescentResult {
  SpectralField v;
  double energy = 0;
  double grad_norm = 0;
  int iterations = 0;
  bool converged = false;
};

/// Unconstrained preconditioned BB descent of F_q; iterates with
/// ||u||_q^q > ball are scaled back onto the sphere of that mass.
FreeDescentResult free_descent(const ProblemData& p, double q, const SpectralField& init, double ball,
                               const MinimizeOptions& opts = {});

struct FirstSolutionOptions {
  MinimizeOptions min;
  std::optional<double> l_q;  // ball radius; default from certify()
  std::vector<SpectralField> warm;
  double tol_id = 1e-6;
};

struct FirstSolution {
  CriticalPointReport report;
  double l_q = 0;
  bool negative_energy = false;
  bool interior = false;
  bool identity_ok = false;
  bool negative_f_moment = false;
  bool norm_bound_ok = false;  // ||u||_q^q <= (q/2)^{q/(q-2)} l_q
};

/// Negative-energy minimizer of F_q over the ball ||u||_q^q <= l_q.
/// Throws HypothesisViolated (h >= 0 somewhere or int f^- = 0) and
/// NonConvergence.
FirstSolution first_solution(const ProblemData& p, double q, const FirstSolutionOptions& opts = {});

}  // namespace biharm
