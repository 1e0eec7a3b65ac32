#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "biharm/problem.hpp"

namespace biharm {

/// K_2^{-2} = pi^2 n (n-4) (n^2-4) Gamma(n/2)^{4/n} Gamma(n)^{-4/n}.
double sobolev_k2_inv_sq(int n);
/// Sharp constant K_2 of the second-order Sobolev inequality on R^n.
double sobolev_k2(int n);

/// Smallest C with ||grad u||^2 <= 2 sigma ||Delta u||^2 + 2 C ||u||^2 on the
/// grid's frequency lattice: max over lambda = |2 pi m|^2 of (lambda - 2 sigma lambda^2)/2, >= 0.
double interp_constant(double sigma, const TorusGeometry& g);

struct LambdaAfOptions {
  int max_iter = 3000;
  int starts = 3;
  double tol = 1e-9;  // relative residual of the masked eigenproblem
  std::uint64_t seed = 1;
  double mask_rel_tol = 1e-12;  // f^- > tol * ||f||_inf marks a node as forbidden
};

struct LambdaAfResult {
  double value;           // nonnegative-cone infimum; +inf on an empty admissible set
  double unsigned_value;  // same quotient without u >= 0
  bool converged = false;
  bool empty = false;
  bool eigenvector_one_signed = false;
  int iterations = 0;
  std::size_t free_nodes = 0;
  std::optional<SpectralField> minimizer;  // unsigned minimizer, sign fixed so its mean is >= 0
};

/// inf (||Delta u||^2 - int a|grad u|^2) / ||u||^2 over u >= 0, u != 0,
/// u = 0 where f^- > 0 (grid mask).
LambdaAfResult lambda_af(const ProblemData& p, const LambdaAfOptions& opts = {});

/// Same masked quotient for an arbitrary self-adjoint operator, used for the
/// squared-gradient quotient of the measure criterion.
struct MaskedQuotientResult {
  double value;
  bool converged;
  bool empty;
  int iterations;
  std::optional<SpectralField> minimizer;
};
/// `numerator` maps u to the field A u with <A u, u> the quotient numerator.
MaskedQuotientResult masked_rayleigh_min(const GeometryPtr& g, const std::vector<bool>& forbidden,
                                         const std::function<SpectralField(const SpectralField&)>& numerator,
                                         const LambdaAfOptions& opts);
std::vector<bool> f_minus_mask(const ProblemData& p, double rel_tol = 1e-12);

enum class EtaConstraint { Equality, Inequality };

struct EtaOptions {
  int max_iter = 4000;
  double tol = 1e-11;         // relative decrease of the quotient over `window` iterations
  int window = 30;
  double constraint_tol = 1e-10;  // relative accuracy of the moment constraint
};

struct EtaResult {
  double value;
  bool converged = false;
  bool feasible = true;
  int iterations = 0;
  double moment_ratio = 0;  // int f^-|u|^q / (||u||_q^q int f^-), should be <= or = eta
  std::optional<SpectralField> minimizer;  // normalized to ||u||_q = 1
};

/// inf of the same quotient over ||u||_q = 1 with int f^-|u|^q = eta int f^-
/// (or <= for the primed variant). Throws Infeasible when the moment target
/// lies outside the range of f^- on the power grid.
EtaResult lambda_af_eta_q(const ProblemData& p, double eta, double q, EtaConstraint kind = EtaConstraint::Equality,
                          const std::optional<SpectralField>& warm = std::nullopt, const EtaOptions& opts = {});

struct RemainderOptions {
  int probes = 1000;
  int ascent_iters = 200;
  std::uint64_t seed = 7;
};
struct RemainderResult {
  double value;  // lower bound on A(eps): the true constant is at least this large
  int probes;
};
/// Discrete surrogate for the remainder constant A(eps) in
/// ||u||_N^2 <= K_2^2 (1+eps) ||Delta u||^2 + A(eps) ||u||^2.
RemainderResult sobolev_remainder(const GeometryPtr& g, double eps, const RemainderOptions& opts = {});

struct IntervalConstants {
  double eta, sigma, eps;
  double lambda_eta;  // lambda_{a,f,eta,q}
  double eps0;        // lambda_eta - ||h||_inf (may be +inf)
  double C_sigma;
  double A;           // remainder surrogate used
  double H;           // ||h||_inf + 2 ||a_+||_inf C(sigma)
  double b, mu, k1q, k2q;
  double C_thm;  // mu eta / (8 H)
};

/// Throws NonPositiveEps0 when lambda_eta <= ||h||_inf and BadSigma when
/// sigma <= 0 or 1 - 2 sigma ||a_+|| <= 0.
IntervalConstants interval_constants(const ProblemData& p, double q, double eta, double sigma, double eps,
                                 double lambda_eta, double A);
/// [2 H / (eta int f^-)]^{exponent}.
double l_bound(const ProblemData& p, double H, double eta, double exponent);

struct CertifyOptions {
  std::vector<double> etas{0.5, 0.1, 0.02};
  std::vector<double> epss{0.1, 0.01};
  std::optional<double> sigma;  // default: 2 sigma ||a_+|| = 1/2, or 1 if a_+ = 0
  LambdaAfOptions lambda;
  EtaOptions eta;
  RemainderOptions remainder;
};

struct HypothesisReport {
  double q;
  int n;
  double K2;
  double lambda_af;
  double lambda_af_unsigned;
  bool lambda_af_converged;
  bool cond1_holds;
  double cond1_margin;  // lambda_af - ||h||_inf
  double ratio;         // sup f^+ / int f^-
  double C_thm;
  bool cond2_holds;
  double cond2_margin;  // C_thm - ratio
  bool cond3_holds;
  double sup_f;
  bool h_negative;
  std::vector<std::pair<double, double>> lambda_eta;  // (eta, lambda_{a,f,eta,q}) in ascending eta
  std::vector<std::pair<double, double>> lambda_eta_equality;
  std::optional<IntervalConstants> chosen;  // configuration with the largest C_thm
  std::vector<IntervalConstants> configurations;
  std::vector<std::pair<double, double>> remainder;  // (eps, A surrogate)
  // Measure criterion diagnostics.
  double measure_f_nonneg;
  double mu_tilde;  // inf int |grad u|^2 / ||u||^2 over the same admissible set
  double measure_bound;  // lower bound on lambda_af implied by the measure criterion
  bool measure_bound_holds;
  double l_N_n_over_4;  // limit bracket with exponent n/4
  double l_N_4_over_n;  // same bracket with exponent 4/n
};

HypothesisReport certify(const ProblemData& p, double q, const CertifyOptions& opts = {});

}  // namespace biharm
