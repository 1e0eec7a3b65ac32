#include "biharm/mountainpass.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace biharm {

namespace {

// Lagrange cubic through the (up to) four samples around [i, i+1].
double local_cubic(const std::vector<double>& x, const std::vector<double>& y, std::size_t i, double t) {
  const std::size_t n = x.size();
  std::size_t lo = i > 0 ? i - 1 : 0;
  std::size_t hi = std::min(n - 1, lo + 3);
  lo = hi >= 3 ? std::min(lo, hi - 3) : 0;
  double s = 0.0;
  for (std::size_t a = lo; a <= hi; ++a) {
    double w = y[a];
    for (std::size_t b = lo; b <= hi; ++b)
      if (b != a) w *= (t - x[b]) / (x[a] - x[b]);
    s += w;
  }
  return s;
}

double bisect_cubic(const std::vector<double>& x, const std::vector<double>& y, std::size_t i) {
  double a = x[i], b = x[i + 1];
  const double fa = local_cubic(x, y, i, a);
  for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
    const double m = 0.5 * (a + b);
    const double fm = local_cubic(x, y, i, m);
    if ((fm < 0.0) == (fa < 0.0)) a = m;
    else b = m;
  }
  return 0.5 * (a + b);
}

double shift_for(const ProblemData& p, double q, const SpectralField& u) {
  double m = 0.0;
  for (double v : u.samples()) m = std::max(m, std::abs(v));
  return 1.0 + p.h_sup() + p.a_plus_sup() + q * (q - 1.0) * p.f_sup_abs() * std::pow(m, q - 2.0);
}

SpectralField precondition(const SpectralField& x, double shift) {
  const auto sym = x.geom().laplacian_symbols();
  return apply_multiplier(x, [&](std::size_t i) { return 1.0 / (sym[i] * sym[i] + shift); });
}

}  // namespace

MuZeros find_mu_zeros(const MuCurve& curve) {
  const auto& an = curve.notes;
  if (an.at_l1 && an.at_l2 && an.at_lo) return {an.at_l1->k, an.at_l2->k, an.at_lo->k, an.at_lo->mu};

  const std::size_t n = curve.k.size();
  if (n < 3 || curve.mu.size() != n) throw ShapeNotFound("mu-curve has fewer than three samples");
  // A geometric grid is interpolated in log k, anything else in k.
  bool positive = true;
  for (double k : curve.k) positive = positive && k > 0.0;
  bool uniform = true;
  const double h = curve.k[1] - curve.k[0];
  for (std::size_t i = 1; i < n; ++i)
    uniform = uniform && std::abs(curve.k[i] - curve.k[i - 1] - h) <= 1e-9 * std::abs(h);
  const bool logx = positive && !uniform;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = logx ? std::log(curve.k[i]) : curve.k[i];
  const std::vector<double>& y = curve.mu;

  std::optional<std::size_t> up, down;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!up && y[i] < 0.0 && y[i + 1] >= 0.0) up = i;
    else if (up && y[i] >= 0.0 && y[i + 1] < 0.0) {
      down = i;
      break;
    }
  }
  if (!up || !down) throw ShapeNotFound("mu-curve has no positive hump between two negative stretches");
  const double x1 = bisect_cubic(x, y, *up);
  const double x2 = bisect_cubic(x, y, *down);

  std::size_t j = *up + 1;
  for (std::size_t i = *up + 1; i <= *down; ++i)
    if (y[i] > y[j]) j = i;
  // Golden section on the interpolant around the top sample.
  double a = std::max(x[j > 0 ? j - 1 : 0], x1), b = std::min(x[std::min(n - 1, j + 1)], x2);
  auto val = [&](double t) {
    std::size_t seg = j;
    if (t < x[j] && j > 0) seg = j - 1;
    return local_cubic(x, y, std::min(seg, n - 2), t);
  };
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  for (int it = 0; it < 200; ++it) {
    if (val(c) > val(d)) b = d;
    else a = c;
    c = b - g * (b - a);
    d = a + g * (b - a);
  }
  const double xo = 0.5 * (a + b);
  auto back = [&](double t) { return logx ? std::exp(t) : t; };
  return {back(x1), back(x2), back(xo), val(xo)};
}

MountainPassResult mountain_pass(const ProblemData& p, double q, const SpectralField& u1, const SpectralField& u2,
                                 const MountainPassOptions& opts) {
  require_same_geometry(u1, p.a());
  require_same_geometry(u2, p.a());
  if (opts.intervals < 2) throw std::invalid_argument("mountain_pass: need at least two intervals");
  const int P = opts.intervals;
  const double m1 = lq_mass(u1, q), m2 = lq_mass(u2, q);
  if (!(m1 > 0.0) || !(m2 > 0.0)) throw std::invalid_argument("mountain_pass: endpoints must be nonzero");

  // Linear interpolation, each node rescaled to the geometric mean mass.
  std::vector<SpectralField> path;
  for (int j = 0; j <= P; ++j) {
    if (j == 0) path.push_back(u1);
    else if (j == P) path.push_back(u2);
    else {
      const double t = static_cast<double>(j) / P;
      SpectralField w = restrict_to(u1.combine(1.0 - t, t, u2), opts.min);
      const double mw = lq_mass(w, q);
      if (!(mw > 0.0)) w = restrict_to(u1.scaled(1.0 - t), opts.min);
      const double target = std::exp((1.0 - t) * std::log(m1) + t * std::log(m2));
      path.push_back(w.scaled(std::pow(target / lq_mass(w, q), 1.0 / q)));
    }
  }
  std::vector<double> E(path.size());
  for (std::size_t j = 0; j < path.size(); ++j) E[j] = eval_F(path[j], p, q);
  const double floor_level = std::max(E.front(), E.back());
  auto interior_max = [&](const std::vector<double>& e) {
    std::size_t j = 1;
    for (std::size_t i = 1; i + 1 < e.size(); ++i)
      if (e[i] > e[j]) j = i;
    return j;
  };

  MountainPassResult res{make_report(u1, p, q), 0, 0, 0, 0, false, false, {}, {}, {}};
  double tau = 1.0;
  auto descend = [&](std::size_t j, double step) {
    const SpectralField g = restrict_to(grad_F(path[j], p, q), opts.min);
    const SpectralField d = precondition(g, shift_for(p, q, path[j]));
    const double slope = inner(g, d);
    if (!(slope > 0.0)) return false;
    // A node may move at most half way to its nearer neighbour, otherwise it
    // can jump over the ridge in one accepted step.
    const double gap = std::min(l2_norm_sq(path[j] - path[j - 1]), l2_norm_sq(path[j + 1] - path[j]));
    step = std::min(step, 0.5 * std::sqrt(gap / l2_norm_sq(d)));
    for (int bt = 0; bt < 50; ++bt, step *= 0.5) {
      const SpectralField trial = path[j].axpy(-step, d);
      const double Et = eval_F(trial, p, q);
      if (Et <= E[j] - 1e-4 * step * slope) {
        path[j] = trial;
        E[j] = Et;
        return true;
      }
    }
    return false;
  };

  int it = 0;
  for (; it < opts.max_iter; ++it) {
    const std::size_t j = interior_max(E);
    if (E[j] <= floor_level + opts.collapse_tol * (1.0 + std::abs(floor_level)))
      throw Collapse("mountain_pass: path maximum fell to the endpoint level");
    const bool moved = descend(j, tau);
    if (moved) {
      tau = std::min(tau * 1.5, 1e6);
      if (j > 1) descend(j - 1, 0.5 * tau);
      if (j + 2 < path.size()) descend(j + 1, 0.5 * tau);
    } else {
      tau *= 0.25;
    }
    res.max_history.push_back(E[interior_max(E)]);
    res.profiles.push_back(E);
    if (opts.reparam_every > 0 && (it + 1) % opts.reparam_every == 0) {
      // Redistribute interior nodes at equal L^2 arc length. This may raise
      // the node maximum: nodes drift away from the ridge and leave a gap
      // that the piecewise-linear path crosses above the node energies.
      std::vector<double> s{0.0};
      for (std::size_t i = 1; i < path.size(); ++i) s.push_back(s.back() + std::sqrt(l2_norm_sq(path[i] - path[i - 1])));
      std::vector<SpectralField> np{path.front()};
      std::vector<double> nE{E.front()};
      std::size_t seg = 0;
      for (int i = 1; i < P; ++i) {
        const double target = s.back() * i / P;
        while (seg + 1 < s.size() - 1 && s[seg + 1] < target) ++seg;
        const double len = s[seg + 1] - s[seg];
        const double t = len > 0.0 ? (target - s[seg]) / len : 0.0;
        np.push_back(path[seg].combine(1.0 - t, t, path[seg + 1]));
        nE.push_back(eval_F(np.back(), p, q));
      }
      np.push_back(path.back());
      nE.push_back(E.back());
      path = std::move(np);
      E = std::move(nE);
      res.reparam_after.push_back(it);
    }
    const auto h = res.max_history.size();
    if (h > static_cast<std::size_t>(opts.stall_window)) {
      const double older = res.max_history[h - 1 - opts.stall_window];
      if (older - res.max_history.back() <= opts.stall_rel * std::abs(res.max_history.back())) {
        res.stalled = true;
        ++it;
        break;
      }
    }
  }
  res.iterations = it;
  const std::size_t top = interior_max(E);
  res.path_max = E[top];

  SpectralField v = path[top];
  if (opts.polish) {
    MuCurveOptions mo;
    mo.min = opts.min;
    SphereMinimum a = minimize_on_sphere(p, q, lq_mass(v, q), v, opts.min);
    if (!a.converged) throw NonConvergence("mountain_pass: constrained polish did not converge");
    if (a.lambda != 0.0) {
      // mu'(k) = 2 lambda / q: walk uphill until the multiplier changes sign.
      const double factor = a.lambda > 0.0 ? 1.25 : 0.8;
      std::optional<SphereMinimum> b;
      for (int step = 0; step < 400 && !b; ++step) {
        SphereMinimum c = minimize_on_sphere(p, q, a.k * factor, a.v, opts.min);
        if (!c.converged) throw NonConvergence("mountain_pass: constrained polish did not converge");
        if ((c.lambda < 0.0) != (a.lambda < 0.0)) b = std::move(c);
        else a = std::move(c);
      }
      if (!b) throw NonConvergence("mountain_pass: no stationary mass found near the path maximum");
      a = refine_stationary_mass(p, q, a, *b, mo);
    }
    v = a.v;
    res.polished = true;
  }
  res.report = make_report(v, p, q);
  res.report.iterations = it;
  res.nu = res.report.energy;
  res.grad_norm = std::sqrt(l2_norm_sq(restrict_to(grad_F(v, p, q), opts.min)));
  res.report.converged = res.grad_norm <= opts.tol_mp * (1.0 + std::abs(res.nu));
  if (!(res.nu > floor_level)) throw Collapse("mountain_pass: critical level is not above the endpoints");
  if (!res.report.converged) throw NonConvergence("mountain_pass: gradient at the critical point above tol_mp");
  return res;
}

}  // namespace biharm
