#include "biharm/minimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace biharm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRoundoff = 1e-13;

double max_abs(const SpectralField& u) {
  double m = 0.0;
  for (double v : u.samples()) m = std::max(m, std::abs(v));
  return m;
}

// (Delta^2 + shift)^{-1} and its inverse.
SpectralField precondition(const SpectralField& x, double shift) {
  const auto sym = x.geom().laplacian_symbols();
  return apply_multiplier(x, [&](std::size_t i) { return 1.0 / (sym[i] * sym[i] + shift); });
}
SpectralField unprecondition(const SpectralField& x, double shift) {
  const auto sym = x.geom().laplacian_symbols();
  return apply_multiplier(x, [&](std::size_t i) { return sym[i] * sym[i] + shift; });
}

double shift_for(const ProblemData& p, double q, double s, const SpectralField& u) {
  return 1.0 + p.h_sup() + p.a_plus_sup() + s * q * (q - 1.0) * p.f_sup_abs() * std::pow(max_abs(u), q - 2.0);
}

// Barzilai-Borwein step for the preconditioned direction, alternating the
// long and short variants. Falls back to doubling on negative curvature.
double bb_step(const SpectralField& s, const SpectralField& y, double shift, int it, double prev) {
  const double sy = inner(s, y);
  if (!(sy > 0.0)) return std::min(prev * 2.0, 1e10);
  if (it % 2 == 0) return inner(s, unprecondition(s, shift)) / sy;
  return sy / inner(y, precondition(y, shift));
}

SpectralField bump_at_max_f(const ProblemData& p, double width) {
  const auto& g = p.geom();
  const auto fs = p.f().samples();
  const std::size_t at = static_cast<std::size_t>(std::max_element(fs.begin(), fs.end()) - fs.begin());
  std::vector<double> s(g.num_nodes());
  for (std::size_t j = 0; j < s.size(); ++j) {
    double r2 = 0.0;
    for (int ax = 0; ax < g.d_eff(); ++ax) {
      double dx = std::abs(g.coord(j, ax) - g.coord(at, ax));
      dx = std::min(dx, 1.0 - dx);
      r2 += dx * dx;
    }
    s[j] = std::exp(-r2 / (2.0 * width * width));
  }
  return SpectralField::from_samples(p.geometry(), std::move(s));
}

}  // namespace

SpectralField restrict_to(const SpectralField& u, const MinimizeOptions& opts) {
  SpectralField out = band_limit(u, opts.mode_cap);
  return opts.subspace ? opts.subspace(out) : out;
}

double h2_norm(const SpectralField& u) {
  return std::sqrt(l2_norm_sq(u) + grad_sq_integral(u) + hessian_sq_integral(u));
}

SphereMinimum minimize_on_sphere(const ProblemData& p, double q, double k, const SpectralField& init,
                                 const MinimizeOptions& opts) {
  if (!(k > 0.0) || !std::isfinite(k)) throw std::invalid_argument("minimize_on_sphere: k must be positive");
  require_same_geometry(init, p.a());
  SpectralField w = restrict_to(init, opts);
  const double m0 = lq_mass(w, q);
  if (!(m0 > 0.0)) throw std::invalid_argument("minimize_on_sphere: zero initial field");

  // Work on the unit sphere: F_q(k^{1/q} w) = k^{2/q} (Q(w) - s int f|w|^q).
  const double s = std::pow(k, 1.0 - 2.0 / q);
  auto retract = [&](const SpectralField& x) { return x.scaled(std::pow(lq_mass(x, q), -1.0 / q)); };
  auto energy = [&](const SpectralField& x) { return quadratic_form(x, p) - s * power_integral(x, p.f_refined(), q); };
  auto gradient = [&](const SpectralField& x) {
    return linear_operator(x, p).combine(2.0, -s * q, power_term(x, p.f_refined(), q));
  };
  // Tangent to the sphere inside the admissible subspace.
  auto tangent = [&](const SpectralField& g, const SpectralField& psi) {
    const SpectralField gr = restrict_to(g, opts), pr = restrict_to(psi, opts);
    return gr.axpy(-inner(gr, pr) / inner(pr, pr), pr);
  };

  w = retract(w);
  const double shift = shift_for(p, q, s, w);
  double E = energy(w);
  SpectralField g = gradient(w);
  SpectralField psi = power_term(w, {}, q);
  SpectralField gt = tangent(g, psi);
  std::deque<double> recent{E};
  double t = 1.0;
  int it = 0;
  bool converged = false;
  for (; it < opts.max_iter; ++it) {
    if (std::sqrt(l2_norm_sq(gt)) <= opts.tol * (1.0 + std::abs(E))) {
      converged = true;
      break;
    }
    // Built from the tangent gradient: the normal part of g is O(|E|) and
    // would swamp the slope near convergence.
    const SpectralField Pg = precondition(gt, shift);
    const SpectralField Ppsi = precondition(psi, shift);
    const SpectralField d = restrict_to(Pg.axpy(-inner(Pg, psi) / inner(Ppsi, psi), Ppsi), opts);
    const double slope = inner(gt, d);
    if (!(slope > 0.0)) break;
    const double ref = *std::max_element(recent.begin(), recent.end());
    bool accepted = false;
    SpectralField wn = w;
    double En = E;
    SpectralField gn = g, psin = psi, gtn = gt;
    for (int bt = 0; bt < 60 && !accepted; ++bt, t *= 0.5) {
      wn = retract(w.axpy(-t, d));
      En = energy(wn);
      const bool armijo = En <= ref - 1e-4 * t * slope;
      // Once energy differences are at roundoff, a drop in the tangent
      // gradient is the only usable signal.
      const bool flat = std::abs(En - E) <= kRoundoff * (1.0 + std::abs(E));
      if (!armijo && !flat) continue;
      gn = gradient(wn);
      psin = power_term(wn, {}, q);
      gtn = tangent(gn, psin);
      accepted = armijo || l2_norm_sq(gtn) < l2_norm_sq(gt);
      if (accepted) break;
    }
    if (!accepted) break;
    t = std::clamp(bb_step(wn - w, gtn - gt, shift, it, t), 1e-12, 1e12);
    w = wn;
    E = En;
    g = gn;
    psi = psin;
    gt = gtn;
    recent.push_back(E);
    if (static_cast<int>(recent.size()) > std::max(1, opts.nonmonotone)) recent.pop_front();
  }
  // Stalled line searches at the roundoff floor still count when the
  // tangent gradient is within a factor of ten of the target.
  if (!converged && std::sqrt(l2_norm_sq(gt)) <= 10.0 * opts.tol * (1.0 + std::abs(E))) converged = true;

  SphereMinimum out{w.scaled(std::pow(k, 1.0 / q)), k, 0, 0, 0, it, converged, -1};
  out.mu = eval_F(out.v, p, q);
  if (opts.mode_cap > 0 || opts.subspace) {
    // Multiplier and residual of the problem restricted to the subspace.
    const SpectralField gr = restrict_to(grad_F(out.v, p, q), opts).scaled(0.5);
    const SpectralField pr = restrict_to(power_term(out.v, {}, q), opts);
    out.lambda = inner(gr, pr) / inner(pr, pr);
    out.residual = std::sqrt(l2_norm_sq(gr.axpy(-out.lambda, pr)));
  } else {
    out.lambda = lagrange_multiplier(out.v, p, q);
    out.residual = el_residual(out.v, p, q, out.lambda);
  }
  return out;
}

std::vector<SpectralField> multistart_seeds(const ProblemData& p, const MinimizeOptions& opts) {
  const GeometryPtr& g = p.geometry();
  const SpectralField one = SpectralField::constant(g, 1.0);
  const SpectralField bump = bump_at_max_f(p, 0.1);
  std::vector<double> c(g->num_nodes());
  for (std::size_t j = 0; j < c.size(); ++j) c[j] = std::cos(2.0 * std::numbers::pi * g->coord(j, 0));
  const SpectralField mode = SpectralField::from_samples(g, std::move(c));
  std::vector<SpectralField> seeds{one, one.scaled(0.2) + bump, one.axpy(-0.8, bump), one.axpy(0.5, mode),
                                   one.axpy(-0.5, mode)};
  std::mt19937_64 rng(opts.seed);
  const int cap = std::max(1, std::min(8, g->grid_size() / 2 - 1));
  for (int i = 0; i < opts.random_starts; ++i) seeds.push_back(random_smooth_field(g, cap, rng));
  for (auto& s : seeds) s = restrict_to(s, opts);
  return seeds;
}

SphereMinimum minimize_multistart(const ProblemData& p, double q, double k, const MinimizeOptions& opts,
                                  const std::vector<SpectralField>& warm) {
  std::vector<SpectralField> starts = multistart_seeds(p, opts);
  starts.insert(starts.end(), warm.begin(), warm.end());
  std::optional<SphereMinimum> best;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    if (!(lq_mass(restrict_to(starts[i], opts), q) > 0.0)) continue;
    SphereMinimum r = minimize_on_sphere(p, q, k, starts[i], opts);
    r.seed_index = static_cast<int>(i);
    // A converged point beats a flagged one; otherwise lowest mu, earliest seed.
    const bool better = !best || (r.converged && !best->converged) ||
                        (r.converged == best->converged && r.mu < best->mu - 1e-12 * std::abs(best->mu));
    if (better) best = std::move(r);
  }
  if (!best) throw std::invalid_argument("minimize_multistart: no usable start");
  return *best;
}

// ---------------------------------------------------------------------------

namespace {

// Illinois regula falsi on log k for a sign change of value(min) between two
// bracketing minimizers. Each trial point is warm-started from both ends.
template <class Value>
SphereMinimum refine_sign_change(const ProblemData& p, double q, SphereMinimum a, SphereMinimum b,
                                 const Value& value, double value_tol, const MuCurveOptions& opts) {
  double fa = value(a), fb = value(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  int side = 0;
  SphereMinimum best = std::abs(fa) < std::abs(fb) ? a : b;
  for (int it = 0; it < 200; ++it) {
    const double la = std::log(a.k), lb = std::log(b.k);
    if (lb - la <= opts.k_rel_tol) break;
    double lc = (la * fb - lb * fa) / (fb - fa);
    if (!(lc > la && lc < lb)) lc = 0.5 * (la + lb);
    const double kc = std::exp(lc);
    SphereMinimum ra = minimize_on_sphere(p, q, kc, a.v, opts.min);
    SphereMinimum rb = minimize_on_sphere(p, q, kc, b.v, opts.min);
    SphereMinimum c = (rb.converged && (!ra.converged || rb.mu < ra.mu)) ? std::move(rb) : std::move(ra);
    const double fc = value(c);
    if (std::abs(fc) < std::abs(value(best))) best = c;
    if (std::abs(fc) <= value_tol || fc == 0.0) return c;
    if ((fc < 0.0) == (fa < 0.0)) {
      a = std::move(c);
      fa = fc;
      if (side == -1) fb *= 0.5;
      side = -1;
    } else {
      b = std::move(c);
      fb = fc;
      if (side == 1) fa *= 0.5;
      side = 1;
    }
  }
  return best;
}

}  // namespace

SphereMinimum refine_stationary_mass(const ProblemData& p, double q, const SphereMinimum& a, const SphereMinimum& b,
                                     const MuCurveOptions& opts) {
  if (!((a.lambda < 0.0) != (b.lambda < 0.0))) throw std::invalid_argument("refine_stationary_mass: no sign change");
  const bool ordered = a.k < b.k;
  return refine_sign_change(p, q, ordered ? a : b, ordered ? b : a, [](const SphereMinimum& r) { return r.lambda; },
                            0.0, opts);
}

namespace {

SphereMinimum point_of(const MuCurve& c, std::size_t i) {
  SphereMinimum r{c.minimizers[i], c.k[i], c.mu[i], c.lagrange[i], c.residual[i], c.iterations[i], c.converged[i],
                  c.winner[i]};
  return r;
}

}  // namespace

MuCurve trace_mu_curve(const ProblemData& p, double q, double k_min, double k_max, int n_points,
                       const MuCurveOptions& opts) {
  if (!(k_min > 0.0) || !(k_max > k_min)) throw std::invalid_argument("trace_mu_curve: need 0 < k_min < k_max");
  if (n_points < 2) throw std::invalid_argument("trace_mu_curve: need at least two points");
  MuCurve c;
  c.q = q;
  const auto n = static_cast<std::size_t>(n_points);
  for (std::size_t i = 0; i < n; ++i)
    c.k.push_back(k_min * std::pow(k_max / k_min, static_cast<double>(i) / static_cast<double>(n - 1)));

  std::vector<SphereMinimum> pts;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<SpectralField> warm;
    if (i > 0) warm.push_back(pts.back().v);
    pts.push_back(minimize_multistart(p, q, c.k[i], opts.min, warm));
  }
  for (std::size_t i = n - 1; i-- > 0;) {
    SphereMinimum r = minimize_on_sphere(p, q, c.k[i], pts[i + 1].v, opts.min);
    if (r.converged && (!pts[i].converged || r.mu < pts[i].mu - 1e-12 * std::abs(pts[i].mu))) {
      r.seed_index = -1;
      pts[i] = std::move(r);
    }
  }
  for (auto& r : pts) {
    c.mu.push_back(r.mu);
    c.lagrange.push_back(r.lambda);
    c.residual.push_back(r.residual);
    c.iterations.push_back(r.iterations);
    c.winner.push_back(r.seed_index);
    c.converged.push_back(r.converged);
    c.minimizers.push_back(r.v);
  }

  MuAnnotations& an = c.notes;
  an.negative_start = n >= 3 && c.mu[0] < 0.0 && c.mu[1] < 0.0 && c.mu[2] < 0.0;

  auto ok = [&](std::size_t i) { return static_cast<bool>(c.converged[i]); };
  auto lambda_of = [](const SphereMinimum& r) { return r.lambda; };
  const double hscale = 1.0 + p.h_sup();
  auto mu_scaled = [&](const SphereMinimum& r) { return r.mu / (std::pow(r.k, 2.0 / q) * hscale); };

  // Hump: first - to + crossing, then + to -. The negative minimum is looked
  // for before the first crossing (after it the curve tends to -inf).
  std::optional<std::size_t> up, down;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!ok(i) || !ok(i + 1)) continue;
    if (!up && c.mu[i] < 0.0 && c.mu[i + 1] >= 0.0) up = i;
    else if (up && c.mu[i] >= 0.0 && c.mu[i + 1] < 0.0) {
      down = i;
      break;
    }
  }
  std::optional<std::size_t> imin;
  for (std::size_t i = 0; i < (up ? *up + 1 : n); ++i)
    if (ok(i) && (!imin || c.mu[i] < c.mu[*imin])) imin = i;
  if (imin && *imin > 0 && *imin + 1 < n && c.mu[*imin] < 0.0) {
    std::size_t lo = *imin - 1, hi = *imin + 1;
    if (c.lagrange[*imin] < 0.0) lo = *imin;
    else hi = *imin;
    if (opts.refine && c.lagrange[lo] < 0.0 && c.lagrange[hi] > 0.0)
      an.at_kq = refine_sign_change(p, q, point_of(c, lo), point_of(c, hi), lambda_of, 0.0, opts);
    else
      an.at_kq = point_of(c, *imin);
  }

  if (up && down) {
    const double ztol = opts.zero_tol;
    an.at_l1 = opts.refine ? refine_sign_change(p, q, point_of(c, *up), point_of(c, *up + 1), mu_scaled, ztol, opts)
                           : point_of(c, *up);
    an.at_l2 = opts.refine
                   ? refine_sign_change(p, q, point_of(c, *down), point_of(c, *down + 1), mu_scaled, ztol, opts)
                   : point_of(c, *down + 1);
    std::size_t imax = *up + 1;
    for (std::size_t i = *up + 1; i <= *down; ++i)
      if (ok(i) && c.mu[i] > c.mu[imax]) imax = i;
    std::optional<SphereMinimum> lo_pt, hi_pt;
    // Bracket lambda: + before the top, - after it.
    for (std::size_t i = *up; i < *down + 1; ++i) {
      if (c.lagrange[i] > 0.0 && c.lagrange[i + 1] <= 0.0 && (i + 1 == imax || i == imax)) {
        lo_pt = point_of(c, i);
        hi_pt = point_of(c, i + 1);
      }
    }
    if (opts.refine && lo_pt && hi_pt) {
      an.at_lo = refine_sign_change(p, q, *lo_pt, *hi_pt, lambda_of, 0.0, opts);
      if (an.at_lo->mu < c.mu[imax]) an.at_lo = point_of(c, imax);
    } else {
      an.at_lo = point_of(c, imax);
    }
  }

  if (opts.interval) {
    const auto& L = *opts.interval;
    an.I_lo = L.k1q;
    an.I_hi = L.k2q;
    an.mu_hat = L.mu;
    double worst = kInf;
    bool holds = true;
    int count = 0;
    auto check = [&](const SphereMinimum& r) {
      const double margin = r.mu - 0.5 * L.mu * std::pow(r.k, 2.0 / q);
      worst = std::min(worst, margin);
      if (margin < -1e-8 * (1.0 + std::abs(r.mu)) || !r.converged) holds = false;
      ++count;
    };
    auto nearest = [&](double k) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < n; ++i)
        if (std::abs(std::log(c.k[i] / k)) < std::abs(std::log(c.k[best] / k))) best = i;
      return best;
    };
    for (double kk : {L.k1q, L.k2q})
      check(minimize_multistart(p, q, kk, opts.min, {c.minimizers[nearest(kk)]}));
    for (std::size_t i = 0; i < n; ++i)
      if (c.k[i] > L.k1q && c.k[i] < L.k2q) check(point_of(c, i));
    an.I_worst_margin = worst;
    an.I_bound_holds = holds;
    an.I_points = count;
  }
  return c;
}

// ---------------------------------------------------------------------------

CriticalPointReport make_report(const SpectralField& v, const ProblemData& p, double q) {
  CriticalPointReport r{v, v, q};
  r.u = to_equation_normalization(v, q);
  r.energy = eval_F(v, p, q);
  r.residual = el_residual(r.u, p, q, 0.0, Normalization::Equation);
  r.int_f_power = power_integral(v, p.f_refined(), q);
  r.identity_gap = std::abs(r.energy - (q / 2.0 - 1.0) * r.int_f_power);
  r.h2_norm = h2_norm(r.u);
  r.lq_mass_v = lq_mass(v, q);
  r.lq_mass_u = lq_mass(r.u, q);
  r.lambda = r.lq_mass_v > 0.0 ? lagrange_multiplier(v, p, q) : 0.0;
  r.degenerate = p.f_sup_abs() == 0.0;
  return r;
}

FreeDescentResult free_descent(const ProblemData& p, double q, const SpectralField& init, double ball,
                               const MinimizeOptions& opts) {
  require_same_geometry(init, p.a());
  auto clamp = [&](const SpectralField& x) {
    const double m = lq_mass(x, q);
    return m > ball ? x.scaled(std::pow(ball / m, 1.0 / q)) : x;
  };
  auto gradient = [&](const SpectralField& x) { return restrict_to(grad_F(x, p, q), opts); };
  SpectralField u = clamp(restrict_to(init, opts));
  const double shift = shift_for(p, q, 1.0, u);
  double F = eval_F(u, p, q);
  SpectralField g = gradient(u);
  std::deque<double> recent{F};
  double t = 0.5;
  int it = 0;
  bool converged = false;
  for (; it < opts.max_iter; ++it) {
    if (std::sqrt(l2_norm_sq(g)) <= opts.tol * (1.0 + std::abs(F))) {
      converged = true;
      break;
    }
    const SpectralField d = precondition(g, shift);
    const double ref = *std::max_element(recent.begin(), recent.end());
    bool accepted = false;
    SpectralField un = u;
    double Fn = F;
    SpectralField gn = g;
    for (int bt = 0; bt < 60 && !accepted; ++bt, t *= 0.5) {
      un = clamp(u.axpy(-t, d));
      Fn = eval_F(un, p, q);
      const bool armijo = Fn <= ref - 1e-4 * inner(g, u - un);
      const bool flat = std::abs(Fn - F) <= kRoundoff * (1.0 + std::abs(F));
      if (!armijo && !flat) continue;
      gn = gradient(un);
      accepted = armijo || l2_norm_sq(gn) < l2_norm_sq(g);
      if (accepted) break;
    }
    if (!accepted) break;
    t = std::clamp(bb_step(un - u, gn - g, shift, it, t), 1e-12, 1e12);
    u = un;
    F = Fn;
    g = gn;
    recent.push_back(F);
    if (static_cast<int>(recent.size()) > std::max(1, opts.nonmonotone)) recent.pop_front();
  }
  const double gn = std::sqrt(l2_norm_sq(g));
  if (!converged && gn <= 10.0 * opts.tol * (1.0 + std::abs(F))) converged = true;
  return {u, F, gn, it, converged};
}

FirstSolution first_solution(const ProblemData& p, double q, const FirstSolutionOptions& opts) {
  p.validate();
  ExponentPair::make(q, p.geom());
  double l = 0.0;
  if (opts.l_q) {
    l = *opts.l_q;
  } else {
    const HypothesisReport cert = certify(p, q);
    if (!cert.chosen) throw HypothesisViolated("first_solution: no admissible (eta, sigma, eps) configuration");
    l = cert.chosen->k1q;
  }
  if (!(l > 0.0)) throw std::invalid_argument("first_solution: ball radius must be positive");

  std::vector<SpectralField> starts = multistart_seeds(p, opts.min);
  starts.insert(starts.end(), opts.warm.begin(), opts.warm.end());
  std::optional<FreeDescentResult> best;
  for (const auto& s0 : starts) {
    const SpectralField w = restrict_to(s0, opts.min);
    const double m = lq_mass(w, q);
    if (!(m > 0.0)) continue;
    // Best point on the ray t w inside the ball: F(t w) = t^2 Q - t^q P.
    const double Q = quadratic_form(w, p);
    const double P = power_integral(w, p.f_refined(), q);
    const double tmax = std::pow(l / m, 1.0 / q);
    double t = 0.0;
    if (Q < 0.0 && P < 0.0) t = std::min(tmax, std::pow(2.0 * Q / (q * P), 1.0 / (q - 2.0)));
    else if (Q < 0.0 || (P > 0.0 && tmax * tmax * Q - std::pow(tmax, q) * P < 0.0)) t = tmax;
    if (t == 0.0) continue;
    FreeDescentResult r = free_descent(p, q, w.scaled(t), l, opts.min);
    const bool better = !best || (r.converged && !best->converged) ||
                        (r.converged == best->converged && r.energy < best->energy - 1e-12 * std::abs(best->energy));
    if (better) best = std::move(r);
  }
  if (!best) throw NonConvergence("first_solution: no start has negative energy in the ball");
  if (!best->converged) throw NonConvergence("first_solution: descent did not reach the gradient tolerance");

  FirstSolution out{make_report(best->v, p, q), l};
  out.report.iterations = best->iterations;
  out.report.converged = true;
  const auto& r = out.report;
  out.negative_energy = r.energy < 0.0;
  out.interior = r.lq_mass_v < l * (1.0 - 1e-9);
  out.identity_ok = r.identity_gap <= opts.tol_id * std::max(std::abs(r.energy), 1e-300);
  out.negative_f_moment = r.int_f_power < 0.0;
  out.norm_bound_ok = r.lq_mass_u <= std::pow(q / 2.0, q / (q - 2.0)) * l * (1.0 + 1e-12);
  return out;
}

}  // namespace biharm
