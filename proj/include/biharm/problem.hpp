#pragma once

#include <optional>
#include <string>
#include <vector>

#include "biharm/errors.hpp"
#include "biharm/expression.hpp"
#include "biharm/torus.hpp"

namespace biharm {

/// Samples an expression at the grid nodes. x2 is rejected on 1-D geometries.
SpectralField parse_coefficient(const std::string& expr, const GeometryPtr& geometry);
/// Samples an already compiled expression on a `size`^d_eff grid.
std::vector<double> sample_expression(const Expression& e, const TorusGeometry& g, int size);

/// 2 < q <= N.
struct ExponentPair {
  double q;
  double N;
  bool subcritical;

  /// Throws HypothesisViolated when q is outside (2, N]. q within 1e-12 of N
  /// snaps to N.
  static ExponentPair make(double q, const TorusGeometry& g);
};

struct HypothesisFlags {
  bool h_negative = false;            // h < 0 at every node
  bool f_minus_mass_positive = false;  // integral of f^- > 0
  bool f_positive_somewhere = false;  // sup f > 0
};

/// Coefficients of the equation plus derived quantities. Construction never
/// rejects a problem for failing the existence hypotheses; they are recorded in
/// `hypotheses()` and enforced by `validate()` where a command needs them.
class ProblemData {
 public:
  static ProblemData from_expressions(const GeometryPtr& geometry, const std::string& a, const std::string& h,
                                      const std::string& f);
  /// f on the 2x power grid is the trigonometric interpolant of `f`.
  static ProblemData from_fields(SpectralField a, SpectralField h, SpectralField f);
  /// Explicit f samples on the power grid.
  static ProblemData from_fields(SpectralField a, SpectralField h, SpectralField f, std::vector<double> f_refined);

  /// Same expressions on another geometry; throws if built from fields.
  ProblemData resampled(const GeometryPtr& geometry) const;

  const GeometryPtr& geometry() const { return a_.geometry(); }
  const TorusGeometry& geom() const { return a_.geom(); }
  const SpectralField& a() const { return a_; }
  const SpectralField& h() const { return h_; }
  const SpectralField& f() const { return f_; }
  const SpectralField& f_plus() const { return f_plus_; }
  const SpectralField& f_minus() const { return f_minus_; }

  /// f, f^+ and f^- sampled on the power grid (power_grid_size per axis).
  const std::vector<double>& f_refined() const { return f_ref_; }
  const std::vector<double>& f_plus_refined() const { return f_plus_ref_; }
  const std::vector<double>& f_minus_refined() const { return f_minus_ref_; }

  double int_f_minus() const { return int_f_minus_; }
  double int_f() const { return int_f_; }
  double int_h() const { return integral(h_); }
  double sup_f_plus() const { return sup_f_plus_; }
  double sup_f() const { return sup_f_; }
  double f_sup_abs() const { return f_sup_abs_; }
  double a_plus_sup() const { return a_plus_sup_; }
  double h_sup() const { return h_sup_; }
  double min_h() const { return min_h_; }
  double max_h() const { return max_h_; }
  double min_a() const { return min_a_; }
  bool a_is_zero() const { return a_is_zero_; }

  const HypothesisFlags& hypotheses() const { return flags_; }
  /// Throws HypothesisViolated unless h < 0 and integral f^- > 0.
  void validate() const;

  const std::optional<std::string>& a_expr() const { return a_expr_; }
  const std::optional<std::string>& h_expr() const { return h_expr_; }
  const std::optional<std::string>& f_expr() const { return f_expr_; }

 private:
  ProblemData(SpectralField a, SpectralField h, SpectralField f, std::vector<double> f_ref);

  SpectralField a_, h_, f_, f_plus_, f_minus_;
  std::vector<double> f_ref_, f_plus_ref_, f_minus_ref_;
  double int_f_minus_ = 0, int_f_ = 0, sup_f_plus_ = 0, sup_f_ = 0, f_sup_abs_ = 0;
  double a_plus_sup_ = 0, h_sup_ = 0, min_h_ = 0, max_h_ = 0, min_a_ = 0;
  bool a_is_zero_ = false;
  HypothesisFlags flags_;
  std::optional<std::string> a_expr_, h_expr_, f_expr_;
};

// Energy. Q(u) = ||Delta u||^2 - int a|grad u|^2 + int h u^2 is evaluated
// spectrally (a-term on the 3/2 grid, h-term on the base grid); the power
// terms use the 2x grid. All of F, G and grad_F are exact for this discrete
// functional, so the gradient matches finite differences to roundoff.

double quadratic_form(const SpectralField& u, const ProblemData& p);
/// Power-grid quadrature of w |u|^q, w given on the power grid (empty w = 1).
double power_integral(const SpectralField& u, const std::vector<double>& w, double q);
/// Power-grid ||u||_q^q; the mass used by every constraint.
double lq_mass(const SpectralField& u, double q);

/// F_q(u) = Q(u) - int f|u|^q. Throws NumericError if non-finite.
double eval_F(const SpectralField& u, const ProblemData& p, double q);
/// G_q(u) = Q(u) + int f^-|u|^q.
double eval_G(const SpectralField& u, const ProblemData& p, double q);
/// L^2 gradient 2 Delta^2 u + 2 div(a grad u) + 2 h u - q f|u|^{q-2}u.
SpectralField grad_F(const SpectralField& u, const ProblemData& p, double q);

/// Projection onto base modes of w |u|^{q-2}u (w on the power grid, empty = 1).
SpectralField power_term(const SpectralField& u, const std::vector<double>& w, double q);
/// Delta^2 u + div(a grad u) + h u.
SpectralField linear_operator(const SpectralField& u, const ProblemData& p);

/// Which equation a field is meant to solve.
/// Variational: the constrained stationarity L v = (lambda + (q/2) f)|v|^{q-2}v.
/// Equation:    L u = (lambda + f)|u|^{q-2}u, lambda usually 0.
enum class Normalization { Variational, Equation };

/// ||L u - (lambda + c f)|u|^{q-2}u||_2 with c = q/2 or 1 by normalization.
double el_residual(const SpectralField& u, const ProblemData& p, double q, double lambda,
                   Normalization norm = Normalization::Variational);
/// Least-squares lambda for the Variational form.
double lagrange_multiplier(const SpectralField& u, const ProblemData& p, double q);

/// (q/2)^{1/(q-2)}; u = factor * v maps a free critical point v of F_q to a
/// solution u of the equation.
double equation_factor(double q);
SpectralField to_equation_normalization(const SpectralField& v, double q);

struct EinsteinConstants {
  double alpha;
  double a0;
};
/// Constant-coefficient conformal fourth-order operator on an Einstein
/// manifold of scalar curvature R. Use a = -alpha, h = a0 (a0 >= 0, so the
/// h < 0 hypothesis fails and is flagged by ProblemData).
EinsteinConstants einstein_preset(int n, double R);

}  // namespace biharm
