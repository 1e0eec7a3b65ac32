#include "biharm/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "biharm/certifier.hpp"
#include "biharm/continuation.hpp"
#include "biharm/minimizer.hpp"
#include "biharm/mountainpass.hpp"

namespace biharm::cli {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Formatting and files

std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

namespace {

json num_or_null(const std::optional<double>& x) { return x ? num(*x) : json(nullptr); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void prepare_out(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw ConfigError("cannot create output directory " + out.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// Report serialization

json to_json(const IntervalConstants& c) {
  return {{"eta", num(c.eta)},     {"sigma", num(c.sigma)}, {"eps", num(c.eps)},     {"lambda_eta", num(c.lambda_eta)},
          {"eps0", num(c.eps0)},   {"C_sigma", num(c.C_sigma)}, {"A", num(c.A)},     {"H", num(c.H)},
          {"b", num(c.b)},         {"mu", num(c.mu)},       {"k1q", num(c.k1q)},     {"k2q", num(c.k2q)},
          {"C_thm", num(c.C_thm)}};
}

json pairs_json(const std::vector<std::pair<double, double>>& v) {
  json a = json::array();
  for (auto [x, y] : v) a.push_back({num(x), num(y)});
  return a;
}

json to_json(const HypothesisReport& r) {
  json j;
  j["q"] = num(r.q);
  j["n"] = r.n;
  j["K2"] = num(r.K2);
  j["lambda_af"] = num(r.lambda_af);
  j["lambda_af_unsigned"] = num(r.lambda_af_unsigned);
  j["lambda_af_converged"] = r.lambda_af_converged;
  j["h_negative"] = r.h_negative;
  j["cond1"] = {{"holds", r.cond1_holds}, {"margin", num(r.cond1_margin)}};
  j["cond2"] = {{"holds", r.cond2_holds}, {"margin", num(r.cond2_margin)}, {"ratio", num(r.ratio)}, {"C", num(r.C_thm)}};
  j["cond3"] = {{"holds", r.cond3_holds}, {"sup_f", num(r.sup_f)}};
  j["lambda_eta"] = pairs_json(r.lambda_eta);
  j["lambda_eta_equality"] = pairs_json(r.lambda_eta_equality);
  j["chosen"] = r.chosen ? to_json(*r.chosen) : json(nullptr);
  json cfgs = json::array();
  for (const auto& c : r.configurations) cfgs.push_back(to_json(c));
  j["configurations"] = cfgs;
  j["remainder"] = pairs_json(r.remainder);
  j["measure"] = {{"f_nonneg", num(r.measure_f_nonneg)},
                  {"mu_tilde", num(r.mu_tilde)},
                  {"bound", num(r.measure_bound)},
                  {"bound_holds", r.measure_bound_holds}};
  j["l_N"] = {{"exponent_n_over_4", num(r.l_N_n_over_4)}, {"exponent_4_over_n", num(r.l_N_4_over_n)}};
  return j;
}

json to_json(const CriticalPointReport& r) {
  return {{"q", num(r.q)},
          {"energy", num(r.energy)},
          {"residual", num(r.residual)},
          {"int_f_power", num(r.int_f_power)},
          {"int_f_power_sign", r.int_f_power > 0 ? 1 : (r.int_f_power < 0 ? -1 : 0)},
          {"identity_gap", num(r.identity_gap)},
          {"h2_norm", num(r.h2_norm)},
          {"lq_mass_v", num(r.lq_mass_v)},
          {"lq_mass_u", num(r.lq_mass_u)},
          {"lambda", num(r.lambda)},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"degenerate", r.degenerate}};
}

json to_json(const SphereMinimum& s) {
  return {{"k", num(s.k)},         {"mu", num(s.mu)},           {"lambda", num(s.lambda)},
          {"residual", num(s.residual)}, {"iterations", s.iterations}, {"converged", s.converged}};
}

json to_json(const MuAnnotations& an) {
  auto opt = [](const std::optional<SphereMinimum>& s) { return s ? to_json(*s) : json(nullptr); };
  return {{"negative_start", an.negative_start},
          {"k_q", opt(an.at_kq)},
          {"l1", opt(an.at_l1)},
          {"l_o", opt(an.at_lo)},
          {"l2", opt(an.at_l2)},
          {"I_q",
           {{"lo", num_or_null(an.I_lo)},
            {"hi", num_or_null(an.I_hi)},
            {"mu_hat", num_or_null(an.mu_hat)},
            {"worst_margin", num_or_null(an.I_worst_margin)},
            {"bound_holds", an.I_bound_holds},
            {"points", an.I_points}}}};
}

json to_json(const ContinuationStep& s) {
  return {{"q", num(s.q)},
          {"l_q", num(s.l_q)},
          {"report", to_json(s.report)},
          {"negative_energy", s.negative_energy},
          {"mass_ok", s.mass_ok},
          {"delta_sq", num(s.delta_sq)},
          {"delta_bound", num(s.delta_bound)},
          {"delta_ok", s.delta_ok},
          {"floor_applies", s.floor_applies},
          {"floor", num(s.floor)},
          {"floor_ok", s.floor_ok},
          {"attempts", s.attempts}};
}

void write_field(const fs::path& out, const std::string& stem, const SpectralField& u) {
  const TorusGeometry& g = u.geom();
  std::string csv = g.d_eff() == 2 ? "x1,x2,value\n" : "x1,value\n";
  const auto s = u.samples();
  for (std::size_t i = 0; i < s.size(); ++i) {
    csv += format_double(g.coord(i, 0)) + ",";
    if (g.d_eff() == 2) csv += format_double(g.coord(i, 1)) + ",";
    csv += format_double(s[i]) + "\n";
  }
  write_text(out / (stem + ".csv"), csv);
  json re = json::array(), im = json::array();
  for (const auto& c : u.coeffs()) {
    re.push_back(c.real());
    im.push_back(c.imag());
  }
  write_json(out / (stem + ".json"), {{"schema", "biharm-field/1"},
                                      {"n_ambient", g.n_ambient()},
                                      {"d_eff", g.d_eff()},
                                      {"grid_size", g.grid_size()},
                                      {"layout", "flat index i1 + M*i2, normalized Fourier coefficients"},
                                      {"re", re},
                                      {"im", im}});
}

void write_mu_curve(const fs::path& out, const MuCurve& c, const json& extra) {
  std::string csv = "k,mu,lagrange,residual,iterations,flags\n";
  for (std::size_t i = 0; i < c.k.size(); ++i) {
    csv += format_double(c.k[i]) + "," + format_double(c.mu[i]) + "," + format_double(c.lagrange[i]) + "," +
           format_double(c.residual[i]) + "," + std::to_string(c.iterations[i]) + "," +
           (c.converged[i] ? "ok" : "nonconverged") + "\n";
  }
  write_text(out / "mu.csv", csv);
  json an = to_json(c.notes);
  an["q"] = num(c.q);
  an.update(extra);
  write_json(out / "annotations.json", an);
  write_text(out / "mu.gp",
             "# gnuplot script for mu.csv\n"
             "set datafile separator ','\n"
             "set logscale x\n"
             "set xlabel 'k'\n"
             "set ylabel 'sgn(mu) log10(1 + |mu|)'\n"
             "set grid\n"
             "plot 'mu.csv' skip 1 using 1:(sgn($2)*log10(1+abs($2))) with linespoints title 'mu'\n");
}

void write_path_profile(const fs::path& out, const MountainPassResult& r) {
  std::string csv = "iteration,node,energy\n";
  for (std::size_t it = 0; it < r.profiles.size(); ++it)
    for (std::size_t j = 0; j < r.profiles[it].size(); ++j)
      csv += std::to_string(it) + "," + std::to_string(j) + "," + format_double(r.profiles[it][j]) + "\n";
  write_text(out / "path_profile.csv", csv);
}

// ---------------------------------------------------------------------------
// Shared pipeline pieces

MinimizeOptions minimize_options(const RunConfig& c) {
  MinimizeOptions m;
  m.tol = c.tol;
  m.max_iter = c.max_iter;
  m.random_starts = c.random_starts;
  m.seed = c.seed;
  return m;
}

// Config echo without the output directory, so reruns elsewhere compare equal.
json echo(const RunConfig& c) {
  json j = to_json(c);
  j.erase("out");
  return j;
}

json header(const char* command, const RunConfig& c, bool forced) {
  return {{"schema", "biharm-report/1"}, {"command", command}, {"config", echo(c)}, {"forced", forced}};
}

/// Certificate for the gate; conditions (1) and (2), plus (3) when asked.
HypothesisReport gate(const ProblemData& p, double q, bool force, bool need_cond3) {
  HypothesisReport r = certify(p, q);
  const bool ok = r.cond1_holds && r.cond2_holds && (!need_cond3 || r.cond3_holds);
  if (!ok && !force) {
    std::ostringstream msg;
    msg << "certify gate failed (cond1 " << r.cond1_holds << ", cond2 " << r.cond2_holds;
    if (need_cond3) msg << ", cond3 " << r.cond3_holds;
    msg << "); rerun with --force to proceed";
    throw ConditionsFailed(msg.str());
  }
  if (need_cond3 && !r.cond3_holds)
    throw HypothesisViolated("sup f <= 0: no positive hump, the mountain-pass solution does not exist");
  return r;
}

struct MountainPassRun {
  MuCurve curve;
  MuZeros zeros;
  MountainPassResult mp;
};

MountainPassRun run_mountain_pass(const ProblemData& p, const RunConfig& c, const HypothesisReport& cert) {
  MuCurveOptions mo;
  mo.min = minimize_options(c);
  if (cert.chosen) mo.interval = *cert.chosen;
  MuCurve curve = trace_mu_curve(p, c.q, c.k_min, c.k_max, c.k_steps, mo);
  const MuZeros z = find_mu_zeros(curve);
  if (!curve.notes.at_l1 || !curve.notes.at_l2) throw ShapeNotFound("mu-curve zeros were not refined");
  MountainPassOptions opts;
  opts.intervals = c.path_intervals;
  opts.min = mo.min;
  MountainPassResult r = mountain_pass(p, c.q, curve.notes.at_l1->v, curve.notes.at_l2->v, opts);
  return {std::move(curve), z, std::move(r)};
}

json mountain_pass_json(const MountainPassRun& run) {
  const auto& r = run.mp;
  return {{"report", to_json(r.report)},
          {"nu", num(r.nu)},
          {"path_max", num(r.path_max)},
          {"grad_norm", num(r.grad_norm)},
          {"iterations", r.iterations},
          {"stalled", r.stalled},
          {"polished", r.polished},
          {"zeros", {{"l1", num(run.zeros.l1)}, {"l2", num(run.zeros.l2)}, {"l_o", num(run.zeros.l_o)}}},
          {"mu_lo", num(run.zeros.mu_lo)},
          {"level_bound_ok", r.nu >= run.zeros.mu_lo - 1e-8 * (1.0 + std::abs(run.zeros.mu_lo))}};
}

const char* error_name(const std::exception_ptr& e, int& code) {
  try {
    std::rethrow_exception(e);
  } catch (const ConditionsFailed&) {
    code = kConditionsFailed;
    return "ConditionsFailed";
  } catch (const ConfigError&) {
    code = kConfigError;
    return "ConfigError";
  } catch (const ExpressionError&) {
    code = kConfigError;
    return "ExpressionError";
  } catch (const HypothesisViolated&) {
    code = kHypothesisViolated;
    return "HypothesisViolated";
  } catch (const NonConvergence&) {
    code = kNonConvergence;
    return "NonConvergence";
  } catch (const ShapeNotFound&) {
    code = kShapeNotFound;
    return "ShapeNotFound";
  } catch (const Collapse&) {
    code = kCollapse;
    return "Collapse";
  } catch (const DivergingNorms&) {
    code = kDivergingNorms;
    return "DivergingNorms";
  } catch (const NumericError&) {
    code = kNumericError;
    return "NumericError";
  } catch (const std::exception&) {
    code = kNumericError;
    return "Error";
  } catch (...) {
    code = kNumericError;
    return "Unknown";
  }
}

std::string error_message(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& x) {
    return x.what();
  } catch (...) {
    return "unknown error";
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

RunConfig parse_config(const json& j) {
  RunConfig c;
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (j.value("schema", std::string()) != kConfigSchema)
      throw ConfigError(std::string("config schema must be \"") + kConfigSchema + "\"");
    for (const auto& [key, _] : j.items()) {
      static const char* known[] = {"schema", "geometry", "coefficients", "q", "mu_curve", "continuation", "solver", "out"};
      if (std::find(std::begin(known), std::end(known), key) == std::end(known))
        throw ConfigError("unknown config key '" + key + "'");
    }
    const json& g = j.at("geometry");
    c.n_ambient = g.at("n_ambient").get<int>();
    c.d_eff = g.value("d_eff", c.d_eff);
    c.grid_size = g.value("grid_size", c.grid_size);
    const json& co = j.at("coefficients");
    c.a = co.value("a", c.a);
    c.h = co.value("h", c.h);
    c.f = co.at("f").get<std::string>();
    c.q = j.value("q", c.q);
    if (j.contains("mu_curve")) {
      const json& m = j["mu_curve"];
      c.k_min = m.value("k_min", c.k_min);
      c.k_max = m.value("k_max", c.k_max);
      c.k_steps = m.value("k_steps", c.k_steps);
    }
    if (j.contains("continuation")) c.continuation_steps = j["continuation"].value("steps", c.continuation_steps);
    if (j.contains("solver")) {
      const json& s = j["solver"];
      c.tol = s.value("tol", c.tol);
      c.random_starts = s.value("random_starts", c.random_starts);
      c.seed = s.value("seed", c.seed);
      c.path_intervals = s.value("path_intervals", c.path_intervals);
      c.max_iter = s.value("max_iter", c.max_iter);
    }
    c.out = j.value("out", c.out.string());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.n_ambient < 5) throw ConfigError("n_ambient must be at least 5");
  if (c.d_eff != 1 && c.d_eff != 2) throw ConfigError("d_eff must be 1 or 2");
  if (c.grid_size < 8 || (c.grid_size & (c.grid_size - 1)) != 0)
    throw ConfigError("grid_size must be a power of two, at least 8");
  if (!(c.q > 2.0)) throw ConfigError("q must exceed 2");
  if (!(c.k_min > 0.0) || !(c.k_max > c.k_min) || c.k_steps < 3)
    throw ConfigError("mu_curve needs 0 < k_min < k_max and k_steps >= 3");
  if (c.continuation_steps < 1) throw ConfigError("continuation.steps must be positive");
  if (!(c.tol > 0.0) || c.random_starts < 0 || c.path_intervals < 2 || c.max_iter < 1)
    throw ConfigError("solver options out of range");
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const RunConfig& c) {
  return {{"schema", kConfigSchema},
          {"geometry", {{"n_ambient", c.n_ambient}, {"d_eff", c.d_eff}, {"grid_size", c.grid_size}}},
          {"coefficients", {{"a", c.a}, {"h", c.h}, {"f", c.f}}},
          {"q", num(c.q)},
          {"mu_curve", {{"k_min", num(c.k_min)}, {"k_max", num(c.k_max)}, {"k_steps", c.k_steps}}},
          {"continuation", {{"steps", c.continuation_steps}}},
          {"solver",
           {{"tol", num(c.tol)},
            {"random_starts", c.random_starts},
            {"seed", c.seed},
            {"path_intervals", c.path_intervals},
            {"max_iter", c.max_iter}}},
          {"out", c.out.string()}};
}

ProblemData make_problem(const RunConfig& c) {
  std::optional<ProblemData> p;
  try {
    p = ProblemData::from_expressions(make_geometry(c.n_ambient, c.d_eff, c.grid_size), c.a, c.h, c.f);
  } catch (const ExpressionError& e) {
    throw ConfigError(std::string("coefficient expression: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!p->hypotheses().h_negative) throw ConfigError("h must be negative at every grid node");
  return std::move(*p);
}

// ---------------------------------------------------------------------------
// Commands

int cmd_certify(const RunConfig& c) {
  prepare_out(c.out);
  const ProblemData p = make_problem(c);
  ExponentPair::make(c.q, p.geom());
  const HypothesisReport r = certify(p, c.q);
  const bool pass = r.cond1_holds && r.cond2_holds;
  json j = header("certify", c, false);
  j["report"] = to_json(r);
  j["pass"] = pass;
  write_json(c.out / "report.json", j);
  return pass ? kOk : kConditionsFailed;
}

int cmd_mu_curve(const RunConfig& c, bool force) {
  prepare_out(c.out);
  const ProblemData p = make_problem(c);
  ExponentPair::make(c.q, p.geom());
  const HypothesisReport cert = gate(p, c.q, force, false);
  MuCurveOptions mo;
  mo.min = minimize_options(c);
  if (cert.chosen) mo.interval = *cert.chosen;
  const MuCurve curve = trace_mu_curve(p, c.q, c.k_min, c.k_max, c.k_steps, mo);
  write_mu_curve(c.out, curve, {{"forced", force}, {"config", echo(c)}});
  return kOk;
}

int cmd_mountain_pass(const RunConfig& c, bool force) {
  prepare_out(c.out);
  const ProblemData p = make_problem(c);
  ExponentPair::make(c.q, p.geom());
  const HypothesisReport cert = gate(p, c.q, force, true);
  const MountainPassRun run = run_mountain_pass(p, c, cert);
  write_mu_curve(c.out, run.curve, {{"forced", force}, {"config", echo(c)}});
  write_path_profile(c.out, run.mp);
  write_field(c.out, "u_mp", run.mp.report.u);
  json j = header("mountain-pass", c, force);
  j["mountain_pass"] = mountain_pass_json(run);
  write_json(c.out / "report.json", j);
  return kOk;
}

int cmd_solve_sub(const RunConfig& c, bool force) {
  prepare_out(c.out);
  const ProblemData p = make_problem(c);
  if (ExponentPair::make(c.q, p.geom()).q >= p.geom().critical_exponent())
    throw ConfigError("solve-sub needs q < N; use solve-critical");
  const HypothesisReport cert = gate(p, c.q, force, true);
  if (!cert.chosen) throw HypothesisViolated("no admissible (eta, sigma, eps) configuration for the ball radius");

  FirstSolutionOptions fo;
  fo.min = minimize_options(c);
  fo.l_q = cert.chosen->k1q;
  const FirstSolution first = first_solution(p, c.q, fo);
  write_field(c.out, "u_min", first.report.u);
  json j = header("solve-sub", c, force);
  j["first"] = to_json(first.report);
  j["first_checks"] = {{"l_q", num(first.l_q)},
                       {"negative_energy", first.negative_energy},
                       {"interior", first.interior},
                       {"identity_ok", first.identity_ok},
                       {"negative_f_moment", first.negative_f_moment},
                       {"norm_bound_ok", first.norm_bound_ok}};
  write_json(c.out / "report.json", j);

  const MountainPassRun run = run_mountain_pass(p, c, cert);
  write_mu_curve(c.out, run.curve, {{"forced", force}, {"config", echo(c)}});
  write_path_profile(c.out, run.mp);
  write_field(c.out, "u_mp", run.mp.report.u);
  j["mountain_pass"] = mountain_pass_json(run);
  const double e1 = first.report.energy, e2 = run.mp.report.energy;
  j["energies"] = {num(e1), num(e2)};
  j["ordering_ok"] = e1 < 0.0 && 0.0 < e2;
  j["distance"] = num(std::sqrt(l2_norm_sq(run.mp.report.v - first.report.v)));
  write_json(c.out / "report.json", j);
  if (!(e1 < 0.0 && 0.0 < e2)) throw NumericError("energy ordering F(v_min) < 0 < F(v_mp) failed");
  return kOk;
}

int cmd_solve_critical(const RunConfig& c, bool force) {
  prepare_out(c.out);
  const ProblemData p = make_problem(c);
  const double N = p.geom().critical_exponent();
  const HypothesisReport cert = gate(p, 0.5 * (2.0 + N), force, false);
  if (!cert.chosen) throw HypothesisViolated("no admissible (eta, sigma, eps) configuration for the schedule");

  ContinuationOptions opts;
  opts.steps = c.continuation_steps;
  opts.solve.min = minimize_options(c);
  opts.constants = *cert.chosen;
  json j = header("solve-critical", c, force);
  j["steps"] = json::array();
  opts.on_step = [&](const ContinuationStep& s) {
    j["steps"].push_back(to_json(s));
    write_json(c.out / "continuation.json", j);
  };
  const ContinuationTrace tr = continue_to_critical(p, opts);
  j["N"] = num(tr.N);
  j["q0"] = num(tr.q0);
  j["frozen"] = {{"sigma", num(tr.sigma)}, {"eta", num(tr.eta)}, {"H", num(tr.H)}, {"C_sigma", num(tr.C_sigma)}};
  j["l_N"] = num(tr.l_N);
  j["final_negative_moment"] = tr.final_negative_moment;
  j["level_bound"] = {{"mass", num(tr.level_mass)}, {"value", num(tr.level_bound)}, {"holds", tr.level_bound_ok}};
  j["critical_residual"] = num(tr.critical_residual);
  json d = json::array();
  for (double x : tr.distance_to_final) d.push_back(num(x));
  j["distance_to_final"] = d;
  write_json(c.out / "continuation.json", j);
  write_field(c.out, "u_critical", tr.steps.back().report.u);
  return kOk;
}

// ---------------------------------------------------------------------------
// Entry point

int report_error(const fs::path& out, const std::exception_ptr& e) {
  int code = kNumericError;
  const char* name = error_name(e, code);
  const std::string msg = error_message(e);
  std::cerr << "error (" << name << "): " << msg << "\n";
  std::error_code ec;
  fs::create_directories(out, ec);
  if (!ec) {
    try {
      write_json(out / "error.json",
                 {{"schema", "biharm-error/1"}, {"error", name}, {"message", msg}, {"exit_code", code}});
    } catch (...) {
    }
  }
  return code;
}

int run(int argc, char** argv) {
  CLI::App app{"Spectral variational solver for fourth-order equations on flat tori"};
  app.require_subcommand(1);
  std::string config_path, out;
  std::optional<double> q, k_min, k_max;
  std::optional<int> k_steps;
  std::optional<std::uint64_t> seed;
  bool force = false;

  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"certify", "Check the hypotheses and compute the certificate constants"},
      {"mu-curve", "Trace k -> mu_k over a geometric grid"},
      {"solve-sub", "Negative-energy and mountain-pass solutions at subcritical q"},
      {"mountain-pass", "Mountain-pass solution between the zeros of the mu-curve"},
      {"solve-critical", "Continuation in q up to the critical exponent"},
  };
  for (const auto& s : subs) {
    CLI::App* sc = app.add_subcommand(s.name, s.help);
    sc->add_option("--config", config_path, "JSON config (schema biharm-config/1)")->required();
    sc->add_option("--q", q, "Exponent, overrides the config");
    sc->add_option("--k-min", k_min, "Smallest k of the mu-curve grid");
    sc->add_option("--k-max", k_max, "Largest k of the mu-curve grid");
    sc->add_option("--k-steps", k_steps, "Number of mu-curve grid points");
    sc->add_option("--seed", seed, "Seed of the random multistart fields");
    sc->add_option("--out", out, "Output directory, overrides the config");
    sc->add_flag("--force", force, "Run even when the certify gate fails");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    if (rc == 0) return kOk;
    report_error(out.empty() ? fs::path("out") : fs::path(out), std::make_exception_ptr(ConfigError(e.what())));
    return kConfigError;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  fs::path out_dir = out.empty() ? fs::path("out") : fs::path(out);
  try {
    if (const char* t = std::getenv("BIHARM_THREADS")) {
      // The solvers are single-threaded; the cap is validated and otherwise
      // has no effect.
      char* end = nullptr;
      const long n = std::strtol(t, &end, 10);
      if (end == t || *end != '\0' || n < 1) throw ConfigError("BIHARM_THREADS must be a positive integer");
    }
    RunConfig c = load_config(config_path);
    if (!out.empty()) c.out = out;
    out_dir = c.out;
    if (q) c.q = *q;
    if (k_min) c.k_min = *k_min;
    if (k_max) c.k_max = *k_max;
    if (k_steps) c.k_steps = *k_steps;
    if (seed) c.seed = *seed;
    c = parse_config(to_json(c));  // revalidate with the overrides applied

    if (cmd == "certify") return cmd_certify(c);
    if (cmd == "mu-curve") return cmd_mu_curve(c, force);
    if (cmd == "solve-sub") return cmd_solve_sub(c, force);
    if (cmd == "mountain-pass") return cmd_mountain_pass(c, force);
    return cmd_solve_critical(c, force);
  } catch (...) {
    return report_error(out_dir, std::current_exception());
  }
}

}  // namespace biharm::cli
