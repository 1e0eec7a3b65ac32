#include "biharm/certifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Dense>

namespace biharm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SpectralField apply_mask(const SpectralField& u, const std::vector<bool>& forbidden) {
  std::vector<double> s(u.samples().begin(), u.samples().end());
  for (std::size_t i = 0; i < s.size(); ++i)
    if (forbidden[i]) s[i] = 0.0;
  return SpectralField::from_samples(u.geometry(), std::move(s));
}

// (Delta^2 + shift)^{-1}
SpectralField inverse_biharmonic(const SpectralField& r, double shift) {
  const auto sym = r.geom().laplacian_symbols();
  return apply_multiplier(r, [&](std::size_t i) { return 1.0 / (sym[i] * sym[i] + shift); });
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

SpectralField numerator_operator(const SpectralField& u, const ProblemData& p) {
  SpectralField out = bilaplacian(u);
  if (!p.a_is_zero()) out = out + div_a_grad(p.a(), u);
  return out;
}

double quotient(const SpectralField& u, const ProblemData& p) {
  const double num = laplacian_sq_integral(u) - (p.a_is_zero() ? 0.0 : weighted_grad_sq_integral(p.a(), u));
  return num / l2_norm_sq(u);
}

}  // namespace

double sobolev_k2_inv_sq(int n) {
  if (n < 5) throw std::invalid_argument("sobolev_k2: n must be >= 5");
  const double nd = n;
  const double log_part = 4.0 / nd * (std::lgamma(nd / 2.0) - std::lgamma(nd));
  return std::numbers::pi * std::numbers::pi * nd * (nd - 4) * (nd * nd - 4) * std::exp(log_part);
}

double sobolev_k2(int n) { return 1.0 / std::sqrt(sobolev_k2_inv_sq(n)); }

double interp_constant(double sigma, const TorusGeometry& g) {
  if (!(sigma > 0.0)) throw BadSigma("interp_constant: sigma must be positive");
  double best = 0.0;
  for (double lam : g.laplacian_symbols()) best = std::max(best, (lam - 2.0 * sigma * lam * lam) / 2.0);
  return best;
}

std::vector<bool> f_minus_mask(const ProblemData& p, double rel_tol) {
  const double tau = rel_tol * p.f_sup_abs();
  const auto fm = p.f_minus().samples();
  std::vector<bool> forbidden(fm.size());
  for (std::size_t i = 0; i < fm.size(); ++i) forbidden[i] = fm[i] > tau;
  return forbidden;
}

// Single-vector LOBPCG on the masked subspace: Rayleigh-Ritz over
// {x, T r, p} with T a shifted inverse bi-Laplacian.
MaskedQuotientResult masked_rayleigh_min(const GeometryPtr& g, const std::vector<bool>& forbidden,
                                         const std::function<SpectralField(const SpectralField&)>& numerator,
                                         const LambdaAfOptions& opts) {
  MaskedQuotientResult out{kInf, true, false, 0, std::nullopt};
  const std::size_t free = static_cast<std::size_t>(std::count(forbidden.begin(), forbidden.end(), false));
  if (free == 0) {
    out.empty = true;
    return out;
  }
  auto A = [&](const SpectralField& u) { return apply_mask(numerator(u), forbidden); };
  std::mt19937_64 rng(opts.seed);
  bool all_converged = true;

  for (int start = 0; start < std::max(1, opts.starts); ++start) {
    SpectralField x = SpectralField::constant(g, 1.0);
    if (start > 0) {
      SpectralField r = random_smooth_field(g, std::max(1, std::min(8, g->grid_size() / 2 - 1)), rng);
      std::vector<double> s(r.samples().begin(), r.samples().end());
      for (double& v : s) v = std::abs(v) + 0.1;
      x = SpectralField::from_samples(g, std::move(s));
    }
    x = apply_mask(x, forbidden);
    x = x.scaled(1.0 / std::sqrt(l2_norm_sq(x)));
    SpectralField Ax = A(x);
    double rho = inner(x, Ax);
    std::optional<SpectralField> p;
    bool converged = false;
    int it = 0;
    for (; it < opts.max_iter; ++it) {
      const SpectralField r = Ax.axpy(-rho, x);
      const double rn = std::sqrt(l2_norm_sq(r));
      // Residual relative to the operator scale seen on x, floored by the
      // first nonzero bi-Laplacian eigenvalue for near-null minimizers.
      const double scale = std::max(std::sqrt(l2_norm_sq(Ax)), std::pow(2.0 * std::numbers::pi, 4));
      if (rn <= opts.tol * scale || rn == 0.0) {
        converged = true;
        break;
      }
      std::vector<SpectralField> basis{x};
      std::vector<SpectralField> candidates{apply_mask(inverse_biharmonic(r, std::max(1.0, std::abs(rho))), forbidden)};
      if (p) candidates.push_back(*p);
      for (auto c : candidates) {
        const double n0 = std::sqrt(l2_norm_sq(c));
        if (n0 == 0.0) continue;
        for (int pass = 0; pass < 2; ++pass)
          for (const auto& b : basis) c = c.axpy(-inner(b, c), b);
        const double n1 = std::sqrt(l2_norm_sq(c));
        if (n1 <= 1e-10 * n0) continue;
        basis.push_back(c.scaled(1.0 / n1));
      }
      const int m = static_cast<int>(basis.size());
      std::vector<SpectralField> Ab;
      Ab.reserve(m);
      Ab.push_back(Ax);
      for (int i = 1; i < m; ++i) Ab.push_back(A(basis[i]));
      Eigen::MatrixXd H(m, m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j <= i; ++j) H(i, j) = H(j, i) = 0.5 * (inner(basis[i], Ab[j]) + inner(basis[j], Ab[i]));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
      const Eigen::VectorXd c = es.eigenvectors().col(0);
      SpectralField xn = basis[0].scaled(c(0));
      SpectralField Axn = Ab[0].scaled(c(0));
      SpectralField pn = SpectralField::zero(g);
      for (int i = 1; i < m; ++i) {
        xn = xn.axpy(c(i), basis[i]);
        Axn = Axn.axpy(c(i), Ab[i]);
        pn = pn.axpy(c(i), basis[i]);
      }
      const double nx = std::sqrt(l2_norm_sq(xn));
      x = xn.scaled(1.0 / nx);
      Ax = Axn.scaled(1.0 / nx);
      p = pn.scaled(1.0 / nx);
      // Recompute A x every few steps to stop recurrence drift.
      if (it % 20 == 19) Ax = A(x);
      rho = inner(x, Ax);
    }
    out.iterations += it;
    all_converged = all_converged && converged;
    if (rho < out.value) {
      out.value = rho;
      out.minimizer = x;
    }
  }
  out.converged = all_converged;
  if (out.minimizer && integral(*out.minimizer) < 0.0) out.minimizer = out.minimizer->scaled(-1.0);
  return out;
}

LambdaAfResult lambda_af(const ProblemData& p, const LambdaAfOptions& opts) {
  LambdaAfResult res{kInf, kInf, false, false, false, 0, 0, std::nullopt};
  const auto forbidden = f_minus_mask(p, opts.mask_rel_tol);
  res.free_nodes = static_cast<std::size_t>(std::count(forbidden.begin(), forbidden.end(), false));
  const auto mq = masked_rayleigh_min(
      p.geometry(), forbidden, [&](const SpectralField& u) { return numerator_operator(u, p); }, opts);
  res.iterations = mq.iterations;
  res.converged = mq.converged;
  if (mq.empty) {
    res.empty = true;
    res.converged = true;
    return res;
  }
  res.unsigned_value = mq.value;
  res.minimizer = mq.minimizer;
  const SpectralField& x = *mq.minimizer;

  double lo = 0.0, hi = 0.0;
  for (double v : x.samples()) {
    lo = std::min(lo, v);
    hi = std::max(hi, std::abs(v));
  }
  res.eigenvector_one_signed = lo >= -1e-8 * hi;

  // Project onto the cone and, if the eigenvector changes sign, descend on
  // the cone with clamping after each preconditioned gradient step.
  auto clamp = [&](const SpectralField& u) {
    std::vector<double> s(u.samples().begin(), u.samples().end());
    for (std::size_t i = 0; i < s.size(); ++i)
      if (forbidden[i] || s[i] < 0.0) s[i] = 0.0;
    return SpectralField::from_samples(u.geometry(), std::move(s));
  };
  SpectralField u = clamp(x);
  double R = quotient(u, p);
  if (!res.eigenvector_one_signed) {
    double alpha = 1.0;
    int stall = 0;
    for (int it = 0; it < opts.max_iter && stall < 50; ++it) {
      const double nn = l2_norm_sq(u);
      const SpectralField grad = numerator_operator(u, p).axpy(-R, u).scaled(2.0 / nn);
      const SpectralField d = apply_mask(inverse_biharmonic(grad, std::max(1.0, std::abs(R))), forbidden);
      bool accepted = false;
      for (int bt = 0; bt < 40; ++bt) {
        const SpectralField trial = clamp(u.axpy(-alpha * nn, d));
        if (l2_norm_sq(trial) > 0.0) {
          const double Rt = quotient(trial, p);
          if (Rt < R) {
            stall = (R - Rt) <= 1e-13 * std::abs(R) ? stall + 1 : 0;
            u = trial.scaled(1.0 / std::sqrt(l2_norm_sq(trial)));
            R = Rt;
            alpha *= 2.0;
            accepted = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (!accepted) break;
    }
  }
  res.value = R;
  return res;
}

// ---------------------------------------------------------------------------

namespace {

struct MomentState {
  double B;  // int f^-|u|^q
  double C;  // int |u|^q
  double ratio() const { return B / C; }
};

MomentState moments(const SpectralField& u, const ProblemData& p, double q) {
  return {power_integral(u, p.f_minus_refined(), q), lq_mass(u, q)};
}

// u * exp(-s g) with g = f^- / max f^-, applied on the base grid.
SpectralField damp(const SpectralField& u, const std::vector<double>& g, double s) {
  std::vector<double> out(u.samples().begin(), u.samples().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= std::exp(-s * g[i]);
  return SpectralField::from_samples(u.geometry(), std::move(out));
}

// Solves ratio(damp(u, s)) = target for s by bracketing and bisection.
std::optional<SpectralField> retract_moment(const SpectralField& u, const ProblemData& p, double q,
                                            const std::vector<double>& g, double target, double tol) {
  auto ratio_at = [&](double s) { return moments(damp(u, g, s), p, q).ratio(); };
  const double r0 = ratio_at(0.0);
  if (std::abs(r0 - target) <= tol * target) return u;
  double a = 0.0, b = 0.0;
  double step = r0 > target ? 1e-3 : -1e-3;
  for (int i = 0; i < 80; ++i) {
    b = a + step;
    const double rb = ratio_at(b);
    if (!std::isfinite(rb)) return std::nullopt;
    if ((r0 > target && rb <= target) || (r0 < target && rb >= target)) break;
    a = b;
    step *= 2.0;
    if (std::abs(step) > 1e4) return std::nullopt;
  }
  // Invariant: ratio(a) on the starting side, ratio(b) on the other.
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (a + b);
    const double rm = ratio_at(m);
    if (std::abs(rm - target) <= tol * target) return damp(u, g, m);
    if ((r0 > target) == (rm > target)) {
      a = m;
    } else {
      b = m;
    }
    if (a == m && b == m) break;
  }
  return damp(u, g, 0.5 * (a + b));
}

}  // namespace

EtaResult lambda_af_eta_q(const ProblemData& p, double eta, double q, EtaConstraint kind,
                          const std::optional<SpectralField>& warm, const EtaOptions& opts) {
  if (!(eta > 0.0)) throw std::invalid_argument("lambda_af_eta_q: eta must be positive");
  const auto& fm = p.f_minus_refined();
  const double int_fm = mean(fm);
  if (!(int_fm > 0.0)) throw Infeasible("lambda_af_eta_q: integral of f^- vanishes");
  const double target = eta * int_fm;
  const double fmin = *std::min_element(fm.begin(), fm.end());
  const double fmax = *std::max_element(fm.begin(), fm.end());
  if (target < fmin || (kind == EtaConstraint::Equality && target > fmax)) {
    throw Infeasible("moment target " + std::to_string(target) + " outside [" + std::to_string(fmin) + ", " +
                     std::to_string(fmax) + "]");
  }
  const auto gb = p.f_minus().samples();
  const double gmax = std::max(*std::max_element(gb.begin(), gb.end()), 1e-300);
  std::vector<double> g(gb.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = gb[i] / gmax;

  auto needs_retraction = [&](const SpectralField& u) {
    if (kind == EtaConstraint::Equality) return true;
    return moments(u, p, q).ratio() > target * (1.0 + opts.constraint_tol);
  };
  auto retract = [&](const SpectralField& u) -> std::optional<SpectralField> {
    if (!needs_retraction(u)) return u;
    return retract_moment(u, p, q, g, target, opts.constraint_tol);
  };
  auto normalize = [&](const SpectralField& u) { return u.scaled(std::pow(lq_mass(u, q), -1.0 / q)); };

  EtaResult res{kInf, false, true, 0, 0.0, std::nullopt};
  std::optional<SpectralField> start = retract(warm ? *warm : SpectralField::constant(p.geometry(), 1.0));
  if (!start) {
    res.feasible = false;
    throw Infeasible("lambda_af_eta_q: could not reach the moment constraint");
  }
  SpectralField u = normalize(*start);
  double R = quotient(u, p);
  std::vector<double> history{R};
  double alpha = 1.0;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    const double nn = l2_norm_sq(u);
    const double shift = std::max(1.0, std::abs(R));
    const SpectralField gR = numerator_operator(u, p).axpy(-R, u).scaled(2.0 / nn);
    SpectralField d = inverse_biharmonic(gR, shift).scaled(-1.0);
    const MomentState ms = moments(u, p, q);
    const bool active = kind == EtaConstraint::Equality || ms.ratio() >= target * (1.0 - 1e-8);
    if (active) {
      const SpectralField gc =
          power_term(u, p.f_minus_refined(), q).axpy(-ms.ratio(), power_term(u, {}, q)).scaled(q / ms.C);
      const SpectralField Tgc = inverse_biharmonic(gc, shift);
      const double dg = inner(gc, d);
      if (kind == EtaConstraint::Equality || dg > 0.0) d = d.axpy(-dg / inner(gc, Tgc), Tgc);
    }
    // Scale-free step: alpha is relative to ||u|| / ||d||.
    const double base = std::sqrt(nn / std::max(l2_norm_sq(d), 1e-300));
    bool accepted = false;
    for (int bt = 0; bt < 50; ++bt) {
      auto trial = retract(u.axpy(alpha * base, d));
      if (trial && l2_norm_sq(*trial) > 0.0) {
        const double Rt = quotient(*trial, p);
        if (Rt < R) {
          u = normalize(*trial);
          R = Rt;
          alpha = std::min(alpha * 2.0, 1.0);
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    history.push_back(R);
    if (!accepted) {
      res.converged = true;
      break;
    }
    const int w = opts.window;
    if (static_cast<int>(history.size()) > w) {
      const double old = history[history.size() - 1 - w];
      if (old - R <= opts.tol * std::max(1.0, std::abs(R))) {
        res.converged = true;
        break;
      }
    }
  }
  res.iterations = it;
  res.value = R;
  res.moment_ratio = moments(u, p, q).ratio() / int_fm;
  res.minimizer = u;
  return res;
}

// ---------------------------------------------------------------------------

RemainderResult sobolev_remainder(const GeometryPtr& g, double eps, const RemainderOptions& opts) {
  const double N = g->critical_exponent();
  const double kappa = (1.0 + eps) / sobolev_k2_inv_sq(g->n_ambient());
  auto phi = [&](const SpectralField& u) {
    return (std::pow(lq_mass(u, N), 2.0 / N) - kappa * laplacian_sq_integral(u)) / l2_norm_sq(u);
  };
  struct Probe {
    double value;
    SpectralField u;
  };
  std::vector<Probe> probes;
  const SpectralField one = SpectralField::constant(g, 1.0);
  probes.push_back({phi(one), one});
  // Every single mode cos and sin (2 pi m.x).
  const int M = g->grid_size();
  for (std::size_t i = 1; i < g->num_nodes(); ++i) {
    bool canonical = true;  // one representative of each +-m pair, Nyquist excluded
    for (int ax = 0; ax < g->d_eff(); ++ax)
      if (g->is_nyquist(g->axis_index(i, ax))) canonical = false;
    if (!canonical) continue;
    const int m0 = g->frequency(g->axis_index(i, 0));
    const int m1 = g->d_eff() > 1 ? g->frequency(g->axis_index(i, 1)) : 0;
    if (m1 < 0 || (m1 == 0 && m0 < 0)) continue;
    for (int kind = 0; kind < 2; ++kind) {
      std::vector<double> s(g->num_nodes());
      for (std::size_t j = 0; j < s.size(); ++j) {
        const double t = 2.0 * std::numbers::pi * (m0 * g->coord(j, 0) + (g->d_eff() > 1 ? m1 * g->coord(j, 1) : 0.0));
        s[j] = kind == 0 ? std::cos(t) : std::sin(t);
      }
      auto u = SpectralField::from_samples(g, std::move(s));
      probes.push_back({phi(u), u});
    }
  }
  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<int> capd(1, std::max(1, M / 4));
  std::uniform_real_distribution<double> decayd(0.5, 2.0), offd(-2.0, 2.0);
  int count = static_cast<int>(probes.size());
  for (int i = 0; i < opts.probes; ++i) {
    auto u = random_smooth_field(g, capd(rng), rng, decayd(rng)) + SpectralField::constant(g, offd(rng));
    probes.push_back({phi(u), u});
    ++count;
  }
  std::sort(probes.begin(), probes.end(), [](const Probe& a, const Probe& b) { return a.value > b.value; });
  double best = probes.front().value;
  // Gradient ascent from the three best probes.
  for (std::size_t k = 0; k < std::min<std::size_t>(3, probes.size()); ++k) {
    SpectralField u = probes[k].u;
    double val = probes[k].value;
    double alpha = 1e-3;
    for (int it = 0; it < opts.ascent_iters; ++it) {
      const double nn = l2_norm_sq(u);
      const double mass = lq_mass(u, N);
      const SpectralField gn = power_term(u, {}, N).scaled(2.0 * std::pow(mass, 2.0 / N - 1.0))
                                   .axpy(-2.0 * kappa, bilaplacian(u));
      const SpectralField grad = gn.axpy(-2.0 * val, u).scaled(1.0 / nn);
      const SpectralField d = inverse_biharmonic(grad, 1.0);
      bool improved = false;
      for (int bt = 0; bt < 30; ++bt) {
        const SpectralField t = u.axpy(alpha, d);
        const double vt = phi(t);
        if (vt > val) {
          u = t.scaled(1.0 / std::sqrt(l2_norm_sq(t)));
          val = vt;
          alpha *= 2.0;
          improved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!improved) break;
    }
    best = std::max(best, val);
  }
  return {best, count};
}

// ---------------------------------------------------------------------------

double l_bound(const ProblemData& p, double H, double eta, double exponent) {
  return std::pow(2.0 * H / (eta * p.int_f_minus()), exponent);
}

IntervalConstants interval_constants(const ProblemData& p, double q, double eta, double sigma, double eps,
                                 double lambda_eta, double A) {
  if (!(sigma > 0.0)) throw BadSigma("sigma must be positive");
  const double s = 1.0 - 2.0 * sigma * p.a_plus_sup();
  if (!(s > 0.0)) throw BadSigma("1 - 2 sigma ||a_+|| must be positive");
  IntervalConstants c{};
  c.eta = eta;
  c.sigma = sigma;
  c.eps = eps;
  c.lambda_eta = lambda_eta;
  c.eps0 = lambda_eta - p.h_sup();
  if (!(c.eps0 > 0.0)) {
    throw NonPositiveEps0("lambda_{a,f,eta,q} = " + std::to_string(lambda_eta) + " does not exceed ||h|| = " +
                          std::to_string(p.h_sup()));
  }
  c.C_sigma = interp_constant(sigma, p.geom());
  c.A = A;
  c.H = p.h_sup() + 2.0 * p.a_plus_sup() * c.C_sigma;
  const double K2sq = 1.0 / sobolev_k2_inv_sq(p.geom().n_ambient());
  if (std::isinf(c.eps0)) {
    c.b = s / (K2sq * (1.0 + eps));
  } else {
    c.b = s * c.eps0 / ((c.eps0 + c.H) * K2sq * (1.0 + eps) + s * A);
  }
  c.mu = std::min(c.b, c.H);
  c.k1q = l_bound(p, c.H, eta, q / (q - 2.0));
  c.k2q = std::pow(2.0, q / (q - 2.0)) * c.k1q;
  c.C_thm = c.mu * eta / (8.0 * c.H);
  return c;
}

HypothesisReport certify(const ProblemData& p, double q, const CertifyOptions& opts) {
  HypothesisReport r{};
  const TorusGeometry& g = p.geom();
  r.q = q;
  r.n = g.n_ambient();
  r.K2 = sobolev_k2(r.n);
  r.h_negative = p.hypotheses().h_negative;
  r.sup_f = p.sup_f();

  const LambdaAfResult laf = lambda_af(p, opts.lambda);
  r.lambda_af = laf.value;
  r.lambda_af_unsigned = laf.unsigned_value;
  r.lambda_af_converged = laf.converged;
  r.cond1_margin = laf.value - p.h_sup();
  r.cond1_holds = r.cond1_margin > 0.0;
  r.ratio = p.int_f_minus() > 0.0 ? p.sup_f_plus() / p.int_f_minus() : kInf;
  r.cond3_holds = p.sup_f() > 0.0;

  const double sigma = opts.sigma ? *opts.sigma : (p.a_plus_sup() > 0.0 ? 0.25 / p.a_plus_sup() : 1.0);

  for (double eps : opts.epss) r.remainder.emplace_back(eps, sobolev_remainder(p.geometry(), eps, opts.remainder).value);

  // Ascending eta with warm starts: every solution stays feasible for the
  // next, looser constraint, so the computed values are monotone.
  std::vector<double> etas = opts.etas;
  std::sort(etas.begin(), etas.end());
  std::optional<SpectralField> warm = laf.minimizer;
  for (double eta : etas) {
    double val = kInf, val_eq = kInf;
    if (p.int_f_minus() > 0.0) {
      try {
        const EtaResult ineq = lambda_af_eta_q(p, eta, q, EtaConstraint::Inequality, warm, opts.eta);
        val = ineq.value;
        warm = ineq.minimizer;
        try {
          val_eq = lambda_af_eta_q(p, eta, q, EtaConstraint::Equality, ineq.minimizer, opts.eta).value;
        } catch (const Infeasible&) {
        }
      } catch (const Infeasible&) {
      }
    }
    r.lambda_eta.emplace_back(eta, val);
    r.lambda_eta_equality.emplace_back(eta, val_eq);
    for (const auto& [eps, A] : r.remainder) {
      try {
        r.configurations.push_back(interval_constants(p, q, eta, sigma, eps, val, A));
      } catch (const NonPositiveEps0&) {
      }
    }
  }
  for (const auto& c : r.configurations)
    if (!r.chosen || c.C_thm > r.chosen->C_thm) r.chosen = c;
  r.C_thm = r.chosen ? r.chosen->C_thm : 0.0;
  r.cond2_margin = r.C_thm - r.ratio;
  r.cond2_holds = r.cond2_margin > 0.0;

  // Measure criterion: lambda_af >= (meas^{-4/n} - A - mu~ ||a||) / (K_2^2 (1+eps)).
  const auto& fr = p.f_refined();
  std::size_t nonneg = 0;
  for (double v : fr) nonneg += v >= 0.0 ? 1 : 0;
  r.measure_f_nonneg = static_cast<double>(nonneg) / static_cast<double>(fr.size());
  const auto forbidden = f_minus_mask(p, opts.lambda.mask_rel_tol);
  const auto mt =
      masked_rayleigh_min(p.geometry(), forbidden, [](const SpectralField& u) { return laplacian(u); }, opts.lambda);
  r.mu_tilde = mt.value;
  double a_sup = 0.0;
  for (double v : p.a().samples()) a_sup = std::max(a_sup, std::abs(v));
  const double eps_m = r.chosen ? r.chosen->eps : (opts.epss.empty() ? 0.1 : opts.epss.front());
  double A_m = r.remainder.empty() ? 1.0 : r.remainder.front().second;
  for (const auto& [e, A] : r.remainder)
    if (e == eps_m) A_m = A;
  if (mt.empty || r.measure_f_nonneg == 0.0) {
    r.measure_bound = kInf;
    r.measure_bound_holds = std::isinf(laf.value);
  } else {
    r.measure_bound = (std::pow(r.measure_f_nonneg, -4.0 / r.n) - A_m - r.mu_tilde * a_sup) * sobolev_k2_inv_sq(r.n) /
                      (1.0 + eps_m);
    r.measure_bound_holds = laf.value >= r.measure_bound;
  }
  if (r.chosen) {
    r.l_N_n_over_4 = l_bound(p, r.chosen->H, r.chosen->eta, r.n / 4.0);
    r.l_N_4_over_n = l_bound(p, r.chosen->H, r.chosen->eta, 4.0 / r.n);
  } else {
    r.l_N_n_over_4 = r.l_N_4_over_n = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

}  // namespace biharm
