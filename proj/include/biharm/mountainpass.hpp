#pragma once

#include <vector>

#include "biharm/minimizer.hpp"

namespace biharm {

struct MuZeros {
  double l1, l2, l_o;
  double mu_lo;  // mu at l_o
};

/// Zeros bracketing the positive hump and its top. Uses the refined
/// annotations when the curve carries them, otherwise bisection on the local
/// cubic interpolant of the samples (in log k when every k > 0).
/// Throws ShapeNotFound when there is no - / + / - pattern.
MuZeros find_mu_zeros(const MuCurve& curve);

struct MountainPassOptions {
  int intervals = 40;  // path has intervals + 1 nodes
  int max_iter = 400;
  int reparam_every = 10;
  int stall_window = 25;
  double stall_rel = 1e-10;
  double collapse_tol = 1e-8;
  double tol_mp = 1e-6;  // gradient target, relative to 1 + nu
  MinimizeOptions min;
  bool polish = true;
};

struct MountainPassResult {
  CriticalPointReport report;
  double nu = 0;            // F_q at the returned critical point
  double path_max = 0;      // max of F_q over the final deformed path (upper bound on the level)
  double grad_norm = 0;     // ||grad F_q(v)||_2
  int iterations = 0;
  bool stalled = false;     // deformation met the stall criterion
  bool polished = false;
  std::vector<double> max_history;            // path maximum after each deformation step
  std::vector<int> reparam_after;             // iterations followed by a reparameterization
  std::vector<std::vector<double>> profiles;  // node energies after each iteration
};

/// Path-deformation mountain pass between u1 and u2: the node of maximal
/// energy (and, with half the step, its neighbours) moves along the
/// preconditioned negative gradient; nodes are redistributed by L^2 arc
/// length every `reparam_every` iterations (which may raise the node maximum;
/// the deformation steps themselves never do). The top node is then polished to
/// the mass where the constrained multiplier vanishes, which is a free
/// critical point. Throws Collapse when the path maximum reaches the endpoint
/// level and NonConvergence when the polish fails.
MountainPassResult mountain_pass(const ProblemData& p, double q, const SpectralField& u1, const SpectralField& u2,
                                 const MountainPassOptions& opts = {});

}  // namespace biharm
