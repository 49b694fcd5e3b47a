#pragma once

/**
 * \file experiment.hpp
 * \brief Config-driven experiments behind the command-line tool.
 *
 * Exit codes: 0 clean run with every enabled check passing, 1 a check failed, 2 bad input or an
 * infeasible parameter choice.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "irlw/analysis.hpp"
#include "irlw/config.hpp"
#include "irlw/constants.hpp"
#include "irlw/errors.hpp"
#include "irlw/geometry.hpp"
#include "irlw/problems.hpp"
#include "irlw/solver.hpp"

namespace irlw {

inline constexpr int exit_ok = 0;
inline constexpr int exit_check_failed = 1;
inline constexpr int exit_bad_input = 2;

/// Space, problem and solver settings resolved from a config.
struct Experiment
{
  ExperimentConfig config;
  SpacePtr space;
  ProblemPtr problem;
  SolverConfig solver;
  double mu_bound{std::numeric_limits<double>::quiet_NaN()};
  double rho_sq{0.0};
  std::optional<double> beta_admissible; ///< nullopt when C_p <= p
  bool hypotheses_satisfied{false};
  RateConstants rate{};
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string join(const std::vector<double>& v)
{
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i)
    s += (i ? ", " : "") + fmt17(v[i]);
  return s;
}

inline std::size_t resolve_dimension(const ExperimentConfig& cfg)
{
  const auto& pb = cfg.problem;
  std::size_t n = 0;
  if (pb.kind == "resistor_network")
    n = pb.edges.size();
  else if (!pb.truth.empty())
    n = pb.truth.size();
  else if (cfg.space.dimension)
    n = *cfg.space.dimension;
  if (cfg.space.dimension && *cfg.space.dimension != n)
    throw ConfigError(cfg.source + ": [space] dimension = " + std::to_string(*cfg.space.dimension) +
                      " does not match the problem size " + std::to_string(n));
  if (n == 0)
    throw ConfigError(cfg.source + ": cannot infer the dimension (give [problem] truth)");
  return n;
}

inline PrimalVector resolve_u0(const std::string& spec, const SpacePtr& space,
                               const ForwardProblem& problem, const std::string& source)
{
  if (spec == "zero")
    return PrimalVector::zero(space);
  const auto& truth = problem.ground_truth();
  if (spec == "truth" || spec.rfind("scaled:", 0) == 0) {
    if (!truth)
      throw ConfigError(source + ": u0 = " + spec + " needs a ground truth");
    if (spec == "truth")
      return *truth;
    char* end = nullptr;
    const std::string num = spec.substr(7);
    const double f = std::strtod(num.c_str(), &end);
    if (num.empty() || *end != '\0' || !std::isfinite(f))
      throw ConfigError(source + ": bad u0 scale '" + num + "'");
    return f * *truth;
  }
  std::vector<double> vals;
  for (const auto& item : split(spec, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0' || !std::isfinite(v))
      throw ConfigError(source + ": u0 must be zero, truth, scaled:<f> or a number list");
    vals.push_back(v);
  }
  if (vals.size() != space->dimension())
    throw ConfigError(source + ": u0 has " + std::to_string(vals.size()) + " entries, expected " +
                      std::to_string(space->dimension()));
  return PrimalVector(space, vals);
}

} // namespace detail

/// Domain geometry from the [space] block; estimates C_p and G_q when they are left on auto.
inline SpacePtr build_space(const ExperimentConfig& cfg)
{
  const auto& s = cfg.space;
  const std::size_t n = detail::resolve_dimension(cfg);
  const bool hilbert = s.p == 2.0 && s.r == 2.0;
  if (hilbert || (s.c_p && s.g_q))
    return SpaceGeometry::make(n, s.p, s.r, s.weights, s.c_p.value_or(1.0), s.g_q.value_or(1.0));
  if (s.estimate_samples < 100)
    throw ConfigError(cfg.source + ": estimate_samples must be at least 100");
  const SpacePtr est = SpaceGeometry::with_estimated_constants(n, s.p, s.r, s.weights,
                                                               s.estimate_samples, s.seed);
  return SpaceGeometry::make(n, s.p, s.r, s.weights, s.c_p.value_or(est->c_p()),
                             s.g_q.value_or(est->g_q()));
}

inline ProblemPtr build_problem(const ExperimentConfig& cfg, const SpacePtr& space)
{
  const auto& pb = cfg.problem;
  if (pb.kind == "diagonal_linear") {
    if (pb.truth.empty() || pb.singular_values.empty())
      throw ConfigError(cfg.source + ": diagonal_linear needs singular_values and truth");
    return make_diagonal_linear(space, pb.singular_values, pb.truth, pb.seed);
  }
  if (pb.kind == "monomial") {
    if (pb.truth.empty() || !pb.domain_radius)
      throw ConfigError(cfg.source + ": monomial needs truth and domain_radius");
    return make_monomial(space, pb.m, pb.truth, *pb.domain_radius);
  }
  if (pb.kind == "resistor_network") {
    if (!space->is_hilbert())
      throw ConfigError(cfg.source + ": resistor_network needs p = r = 2");
    if (!pb.domain_radius)
      throw ConfigError(cfg.source + ": resistor_network needs domain_radius");
    NetworkSpec spec;
    spec.boundary_nodes = pb.boundary_nodes;
    spec.interior_nodes = pb.interior_nodes;
    spec.edges = pb.edges;
    spec.sigma_truth = pb.truth;
    spec.domain_radius = *pb.domain_radius;
    spec.weights = cfg.space.weights;
    spec.constant_samples = pb.constant_samples;
    spec.seed = pb.seed;
    return make_resistor_network(spec);
  }
  throw ConfigError(cfg.source + ": unknown problem kind '" + pb.kind + "'");
}

/**
 * \brief Resolve every "auto" value and check the step-size and ball hypotheses.
 *
 * With \p strict, C_p <= p (no admissible beta bound) is an error instead of a warning.
 */
inline Experiment build_experiment(const ExperimentConfig& cfg, bool strict = false)
{
  Experiment ex;
  ex.config = cfg;
  ex.space = build_space(cfg);
  ex.problem = build_problem(cfg, ex.space);
  const auto& sp = *ex.space;
  const auto& pc = ex.problem->constants();
  const auto& sv = cfg.solver;
  const double eps = pc.stability_eps;

  // Step size.
  try {
    ex.mu_bound = step_size_bound(sp, pc);
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(std::string("Eq. (3.29): ") + e.what());
  }
  const double mu = sv.mu ? *sv.mu : sv.mu_factor * ex.mu_bound;
  if (!(mu < ex.mu_bound)) {
    const std::string where = eps == 0.0 ? "Eq. (3.29)" : "Eq. (3.3)";
    std::ostringstream msg;
    msg << "step size mu = " << detail::fmt17(mu) << " violates the bound of " << where
        << ": mu must be below " << detail::fmt17(ex.mu_bound);
    if (!sv.allow_large_step)
      throw InfeasibleError(msg.str());
    ex.warnings.push_back(msg.str() + " (allowed by allow_large_step)");
  }

  // Initial guess and ball radius.
  const PrimalVector u0 = detail::resolve_u0(sv.u0, ex.space, *ex.problem, cfg.source);
  const auto& truth = ex.problem->ground_truth();
  const double gamma0 = truth ? shifted_bregman(*truth, u0, u0) : 0.0;
  if (sv.rho_sq) {
    ex.rho_sq = *sv.rho_sq;
  } else {
    if (eps == 0.0)
      throw ConfigError(cfg.source + ": rho_sq must be given explicitly when eps = 0 "
                                     "(the radius formula is singular there)");
    double rho = rho_squared(sp, pc);
    const double R = ex.problem->domain_radius();
    if (std::isfinite(R))
      rho = std::min(rho, sp.c_p() / sp.p() * std::pow(R, sp.p()));
    if (!std::isfinite(rho))
      rho = gamma0 > 0.0 ? gamma0 : 1.0;
    ex.rho_sq = rho;
  }
  if (!(ex.rho_sq > 0.0) || !std::isfinite(ex.rho_sq))
    throw ConfigError(cfg.source + ": rho_sq must be positive and finite");
  if (gamma0 > ex.rho_sq)
    throw InfeasibleError("Assumption 3.1(6): the initial guess is outside the ball B (gamma_0 = " +
                          detail::fmt17(gamma0) + " > rho^2 = " + detail::fmt17(ex.rho_sq) + ")");

  // Regularization bound.
  double beta_max = sv.beta_max;
  if (sp.c_p() > sp.p()) {
    ex.beta_admissible = beta_admissible_max(sp);
    beta_max = std::min(beta_max, *ex.beta_admissible);
    ex.hypotheses_satisfied = true;
  } else {
    const std::string msg = "Assumption 3.1(7): no admissible beta bound since C_p = " +
                            detail::fmt17(sp.c_p()) + " <= p = " + detail::fmt17(sp.p()) +
                            "; convergence-rate hypotheses are not satisfied";
    if (strict)
      throw InfeasibleError(msg);
    ex.warnings.push_back(msg);
  }
  if (beta_max >= 1.0)
    beta_max = std::nextafter(1.0, 0.0);

  SolverConfig& s = ex.solver;
  s.mu = mu;
  s.schedule = {schedule_kind_from_string(sv.schedule), sv.beta_base, sv.beta_decay,
                sv.smoothness_C, beta_max};
  s.variant = variant_from_string(sv.variant);
  s.max_iterations = sv.max_iterations;
  s.residual_tolerance = sv.residual_tolerance;
  s.gamma_tolerance = sv.gamma_tolerance;
  s.u0 = u0;
  s.rho_sq = ex.rho_sq;
  s.allow_large_step = sv.allow_large_step;
  ex.rate = evaluate_rate_constants(sp, pc, mu, ex.rho_sq, 0.0);
  s.bound = eps == 0.0 ? RecursionBound::eps_zero(ex.space, ex.rate)
                       : RecursionBound::holder(ex.space, ex.rate, eps);
  validate(s, *ex.problem);
  return ex;
}

/// Config echo with every auto value replaced by its resolved number.
inline void write_resolved_config(std::ostream& os, const Experiment& ex)
{
  const auto& c = ex.config;
  const auto& sp = *ex.space;
  const auto f = [](double x) { return detail::fmt17(x); };
  os << "# resolved from " << c.source << "\n";
  os << "[space]\n";
  os << "dimension = " << sp.dimension() << "\n";
  os << "p = " << f(sp.p()) << "\nr = " << f(sp.r()) << "\n";
  if (!c.space.weights.empty())
    os << "weights = " << detail::join(c.space.weights) << "\n";
  os << "c_p = " << f(sp.c_p()) << "\ng_q = " << f(sp.g_q()) << "\n";
  os << "estimate_samples = " << c.space.estimate_samples << "\nseed = " << c.space.seed << "\n\n";

  const auto& pb = c.problem;
  os << "[problem]\nkind = " << pb.kind << "\n";
  if (!pb.singular_values.empty())
    os << "singular_values = " << detail::join(pb.singular_values) << "\n";
  os << "truth = " << detail::join(pb.truth) << "\n";
  if (pb.kind == "monomial")
    os << "m = " << f(pb.m) << "\n";
  if (pb.domain_radius)
    os << "domain_radius = " << f(*pb.domain_radius) << "\n";
  if (pb.kind == "resistor_network") {
    os << "boundary_nodes = " << pb.boundary_nodes << "\ninterior_nodes = " << pb.interior_nodes
       << "\nedges = ";
    for (std::size_t i = 0; i < pb.edges.size(); ++i)
      os << (i ? ", " : "") << pb.edges[i].first << '-' << pb.edges[i].second;
    os << "\nconstant_samples = " << pb.constant_samples << "\n";
  }
  os << "seed = " << pb.seed << "\n\n";

  const auto& s = ex.solver;
  os << "[solver]\nmu = " << f(s.mu) << "\n";
  os << "allow_large_step = " << (s.allow_large_step ? "true" : "false") << "\n";
  os << "rho_sq = " << f(s.rho_sq) << "\n";
  os << "schedule = " << to_string(s.schedule.kind) << "\n";
  os << "beta_base = " << f(s.schedule.base) << "\nbeta_decay = " << f(s.schedule.decay) << "\n";
  os << "smoothness_C = " << f(s.schedule.smoothness_C) << "\n";
  os << "beta_max = " << f(s.schedule.beta_max) << "\n";
  os << "variant = " << to_string(s.variant) << "\n";
  os << "max_iterations = " << s.max_iterations << "\n";
  os << "residual_tolerance = " << f(s.residual_tolerance) << "\n";
  os << "gamma_tolerance = " << f(s.gamma_tolerance) << "\n";
  os << "u0 = " << detail::join(std::vector<double>(s.u0->coefficients().begin(),
                                                    s.u0->coefficients().end()))
     << "\n\n";

  os << "[analysis]\nchecks = ";
  for (std::size_t i = 0; i < c.analysis.checks.size(); ++i)
    os << (i ? ", " : "") << c.analysis.checks[i];
  os << "\nburn_in = " << f(c.analysis.burn_in) << "\n";
  os << "convergence_target = " << f(c.analysis.convergence_target) << "\n\n";
  os << "[estimate]\nsamples = " << c.estimate.samples << "\nseed = " << c.estimate.seed << "\n";
  if (c.estimate.radius)
    os << "radius = " << f(*c.estimate.radius) << "\n";
}

// ---------------------------------------------------------------------------------------------
// run

struct RunResult
{
  IterationTrace trace;
  AnalysisTable table;
  Summary summary;
  bool all_checks_pass{true};
  int exit_code{exit_ok};
};

namespace detail {

inline std::string verdict(bool numeric_pass, bool hypotheses)
{
  if (!hypotheses)
    return "hypotheses-not-satisfied";
  return numeric_pass ? "pass" : "fail";
}

inline bool enabled(const ExperimentConfig& c, const std::string& check)
{
  return std::find(c.analysis.checks.begin(), c.analysis.checks.end(), check) !=
         c.analysis.checks.end();
}

} // namespace detail

/// Solve and analyse; pure apart from the returned record.
inline RunResult run_experiment(const Experiment& ex)
{
  RunResult res;
  const auto& sp = *ex.space;
  const auto& pc = ex.problem->constants();
  const auto& rc = ex.rate;
  const double eps = pc.stability_eps;
  auto& sum = res.summary;
  res.trace = solve(*ex.problem, ex.solver);
  const auto& tr = res.trace;
  const bool hyp = ex.hypotheses_satisfied;

  sum.set("config", ex.config.source);
  sum.set("problem", ex.problem->kind());
  sum.set("status", to_string(tr.status));
  sum.set("iterations", tr.records.size() - 1);
  sum.set("p", sp.p());
  sum.set("q", sp.q());
  sum.set("r", sp.r());
  sum.set("c_p", sp.c_p());
  sum.set("g_q", sp.g_q());
  sum.set("L", pc.lipschitz_L);
  sum.set("Lhat", pc.deriv_bound_Lhat);
  sum.set("C_F", pc.stability_CF);
  sum.set("eps", eps);
  sum.set("mu", ex.solver.mu);
  sum.set("mu_bound", ex.mu_bound);
  sum.set("rho_sq", ex.rho_sq);
  sum.set("beta_max", ex.solver.schedule.beta_max);
  sum.set("beta_admissible_max",
          ex.beta_admissible ? detail::fmt17(*ex.beta_admissible) : std::string("INFEASIBLE"));
  sum.set("K1", rc.k1);
  sum.set("K2", rc.k2);
  sum.set("K3", rc.k3);
  sum.set("K4", rc.k4);
  sum.set("K5", rc.k5);
  sum.set("M1", rc.m1);
  sum.set("hypotheses", std::string(hyp ? "satisfied" : "not-satisfied"));
  sum.set("residual_final", tr.records.back().residual);

  const bool converged =
      tr.status == Status::residual_converged || tr.status == Status::gamma_converged;
  bool all_pass = converged;
  if (!tr.has_gamma()) {
    sum.set("gamma_available", false);
    res.all_checks_pass = all_pass;
    res.exit_code = all_pass ? exit_ok : exit_check_failed;
    return res;
  }

  const auto gammas = tr.gammas();
  const auto betas = tr.betas();
  std::vector<double> alphas;
  for (const auto& r : tr.records)
    alphas.push_back(r.alpha.value_or(alpha_k(sp, r.beta)));
  const std::size_t n = gammas.size();
  sum.set("gamma_0", gammas.front());
  sum.set("gamma_final", gammas.back());
  res.table.gamma = gammas;
  res.table.bound.assign(n, std::nullopt);
  res.table.slack.assign(n, std::nullopt);
  res.table.eta.assign(n, std::nullopt);
  res.table.order_condition.assign(n, std::nullopt);

  if (detail::enabled(ex.config, "descent")) {
    double max_inc = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < n; ++k)
      max_inc = std::max(max_inc, gammas[k + 1] - gammas[k]);
    const bool in_ball = std::all_of(tr.records.begin(), tr.records.end(),
                                     [](const auto& r) { return r.in_ball; });
    const bool reached = gammas.back() < ex.config.analysis.convergence_target;
    const bool ok = (n < 2 || max_inc <= recursion_tolerance) && in_ball && reached;
    sum.set("max_gamma_increase", n < 2 ? 0.0 : max_inc);
    sum.set("in_ball_all", in_ball);
    sum.set("converged_below_target", reached);
    sum.set("descent_numeric", std::string(ok ? "pass" : "fail"));
    sum.set("descent_verdict", detail::verdict(ok, hyp));
    all_pass = all_pass && ok;
  }

  if (detail::enabled(ex.config, "recursion")) {
    const auto chk = check_recursion(tr, *ex.solver.bound);
    for (std::size_t k = 0; k < chk.slack.size(); ++k)
      res.table.slack[k] = chk.slack[k];
    sum.set("recursion_form", std::string(eps == 0.0 ? "zero_exponent" : "holder"));
    sum.set("recursion_criterion", std::string("min_slack>=-1e-12"));
    sum.set("min_slack", chk.min_slack);
    sum.set("recursion_numeric", std::string(chk.holds() ? "pass" : "fail"));
    sum.set("recursion_verdict", detail::verdict(chk.holds(), hyp));
    all_pass = all_pass && chk.holds();
  }

  if (detail::enabled(ex.config, "envelope")) {
    const double c = infer_smoothness_C(tr);
    const bool smooth = smoothness_condition_holds(tr, c);
    sum.set("smoothness_C", c);
    sum.set("smoothness_condition", std::string(smooth ? "pass" : "fail"));
    if (!smooth) {
      sum.set("envelope_numeric", std::string("skipped"));
      sum.set("envelope_verdict", std::string("skipped"));
    } else {
      std::vector<double> bound;
      std::string kind;
      try {
        if (eps == 1.0) {
          kind = "product";
          const auto pb = product_bound_eps1(alphas, rc.k2, rc.k5, c, ex.rho_sq, n - 1);
          bound = pb.bound;
          sum.set("product_factors_outside_unit", pb.factors_outside_unit);
        } else if (eps == 0.0) {
          kind = "zero_exponent";
          bound = envelope_series(alphas, rc.m1, rc.k5, c, ex.rho_sq, 1.0, n - 1).predicted_bound;
        } else {
          kind = "holder";
          bound = rate_envelope(alphas, rc.k2, rc.k5, c, ex.rho_sq, eps, n - 1).predicted_bound;
        }
      } catch (const Error& e) {
        sum.set("envelope_error", std::string(e.what()));
      }
      const double excess = bound.empty() ? std::numeric_limits<double>::quiet_NaN()
                                          : envelope_excess(gammas, bound);
      const bool ok = n < 2 || excess <= envelope_tolerance;
      for (std::size_t k = 0; k < bound.size() && k < n; ++k)
        res.table.bound[k] = bound[k];
      sum.set("envelope_kind", kind);
      sum.set("envelope_max_excess", n < 2 ? 0.0 : excess);
      sum.set("envelope_numeric", std::string(ok ? "pass" : "fail"));
      sum.set("envelope_verdict", detail::verdict(ok, hyp));
      all_pass = all_pass && ok;
    }
  }

  if (detail::enabled(ex.config, "order")) {
    const bool positive =
        std::all_of(betas.begin(), betas.end(), [](double b) { return b > 0.0; });
    if (!positive || n < 2) {
      sum.set("order_numeric", std::string("skipped"));
      sum.set("order_verdict", std::string("skipped"));
    } else {
      const auto oc = check_order(gammas, betas, alphas, sp.q(), rc.k5, ex.config.analysis.burn_in);
      std::size_t held = 0;
      for (std::size_t k = 0; k < oc.condition.size(); ++k) {
        res.table.order_condition[k] = oc.condition[k] != 0;
        held += oc.condition[k] ? 1 : 0;
      }
      for (std::size_t k = 0; k < n; ++k)
        res.table.eta[k] = oc.eta[k];
      const bool slope_ok = std::isfinite(oc.fitted_slope) && oc.fitted_slope >= sp.q() - 1.0 - 0.15;
      const bool ok = !oc.all_conditions_hold || slope_ok;
      sum.set("eta_cap", oc.eta_cap);
      sum.set("order_fitted_slope", oc.fitted_slope);
      sum.set("order_slope_stderr", oc.slope_stderr);
      sum.set("order_target_slope", sp.q() - 1.0);
      sum.set("order_conditions_held", held);
      sum.set("order_conditions_total", oc.condition.size());
      sum.set("order_numeric", std::string(ok ? "pass" : "fail"));
      sum.set("order_verdict", detail::verdict(ok, hyp));
      all_pass = all_pass && ok;
    }
  }

  res.all_checks_pass = all_pass;
  res.exit_code = all_pass ? exit_ok : exit_check_failed;
  sum.set("exit_code", std::size_t(res.exit_code));
  return res;
}

/// Options shared by the subcommands.
struct CommandOptions
{
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  bool strict{false};
  std::optional<std::string> suite;
};

namespace detail {

inline ExperimentConfig load_with_overrides(const CommandOptions& opt)
{
  auto cfg = load_experiment(opt.config);
  if (opt.seed) {
    cfg.estimate.seed = *opt.seed;
    cfg.space.seed = *opt.seed;
  }
  return cfg;
}

inline std::filesystem::path output_dir(const CommandOptions& opt, const ExperimentConfig& cfg)
{
  if (opt.out)
    return *opt.out;
  if (!cfg.output.directory.empty())
    return cfg.output.directory;
  return std::filesystem::path("irlw_out") / cfg.name;
}

inline std::ofstream open_out(const std::filesystem::path& p)
{
  std::ofstream os(p, std::ios::binary);
  if (!os)
    throw ConfigError("cannot write " + p.string());
  return os;
}

// Wraps a subcommand body: library errors become exit code 2.
inline int guarded(std::ostream& err, const std::function<int()>& body)
{
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_bad_input;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_bad_input;
  }
}

} // namespace detail

/// `run`: solve, analyse and write trace.csv, analysis.csv, summary.txt and resolved_config.ini.
inline int run_command(const CommandOptions& opt, std::ostream& out, std::ostream& err)
{
  return detail::guarded(err, [&] {
    const auto cfg = detail::load_with_overrides(opt);
    const auto ex = build_experiment(cfg, opt.strict);
    for (const auto& w : ex.warnings)
      err << "warning: " << w << "\n";
    const auto res = run_experiment(ex);
    const auto dir = detail::output_dir(opt, cfg);
    std::filesystem::create_directories(dir);
    {
      auto os = detail::open_out(dir / "resolved_config.ini");
      write_resolved_config(os, ex);
    }
    {
      auto os = detail::open_out(dir / "trace.csv");
      write_trace_csv(os, res.trace);
    }
    {
      auto os = detail::open_out(dir / "analysis.csv");
      write_analysis_csv(os, res.table);
    }
    {
      auto os = detail::open_out(dir / "summary.txt");
      res.summary.write(os);
    }
    res.summary.write(out);
    out << "output=" << dir.string() << "\n";
    return res.exit_code;
  });
}

/// `check-constants`: print the constants table without iterating.
inline int check_constants_command(const CommandOptions& opt, std::ostream& out, std::ostream& err)
{
  return detail::guarded(err, [&] {
    const auto cfg = detail::load_with_overrides(opt);
    const auto space = build_space(cfg);
    const auto problem = build_problem(cfg, space);
    const auto& sp = *space;
    const auto& pc = problem->constants();
    const auto f = [](double x) { return detail::fmt17(x); };
    out << "p=" << f(sp.p()) << "\nq=" << f(sp.q()) << "\nr=" << f(sp.r()) << "\n";
    out << "C_p=" << f(sp.c_p()) << "\nG_q=" << f(sp.g_q()) << "\n";
    out << "L=" << f(pc.lipschitz_L) << "\nLhat=" << f(pc.deriv_bound_Lhat)
        << "\nC_F=" << f(pc.stability_CF) << "\neps=" << f(pc.stability_eps) << "\n";
    out << "K_p=" << f(kappa_p(sp.p())) << "\nK_p_min_term=" << kappa_p_min_term(sp.p()) << "\n";
    out << "mu_max=" << f(mu_max(sp, pc)) << "\n";
    try {
      out << "mu_max_eps0=" << f(mu_max_eps0(sp, pc)) << "\n";
    } catch (const InfeasibleError&) {
      out << "mu_max_eps0=INFEASIBLE\n";
    }
    if (pc.stability_eps > 0.0)
      out << "rho_squared=" << f(rho_squared(sp, pc)) << "\n";
    else
      out << "rho_squared=EXPLICIT_REQUIRED\n";
    if (sp.c_p() > sp.p())
      out << "beta_admissible_max=" << f(beta_admissible_max(sp)) << "\n";
    else
      out << "beta_admissible_max=INFEASIBLE\n";
    const auto ex = build_experiment(cfg, opt.strict);
    for (const auto& w : ex.warnings)
      err << "warning: " << w << "\n";
    const auto& rc = ex.rate;
    out << "mu=" << f(ex.solver.mu) << "\nrho_sq=" << f(ex.rho_sq) << "\n";
    out << "beta_max=" << f(ex.solver.schedule.beta_max) << "\n";
    out << "K1=" << f(rc.k1) << "\nK2=" << f(rc.k2) << "\nK3=" << f(rc.k3) << "\nK4=" << f(rc.k4)
        << "\nK5=" << f(rc.k5) << "\nM1=" << f(rc.m1) << "\nt=" << f(rc.t) << "\n";
    out << "alpha_0=" << f(alpha_k(sp, emit_beta(ex.solver.schedule, 0, 0.0))) << "\n";
    return exit_ok;
  });
}

/// Radius used by `estimate` when the config leaves it on auto.
inline double default_estimate_radius(const ForwardProblem& problem)
{
  const double R = problem.domain_radius();
  if (std::isfinite(R))
    return R;
  return problem.ground_truth() ? std::max(1.0, norm(*problem.ground_truth())) : 1.0;
}

/// `estimate`: fit the stability exponent and write stability_fit.csv and summary.txt.
inline int estimate_command(const CommandOptions& opt, std::ostream& out, std::ostream& err)
{
  return detail::guarded(err, [&] {
    const auto cfg = detail::load_with_overrides(opt);
    const auto space = build_space(cfg);
    const auto problem = build_problem(cfg, space);
    const double radius = cfg.estimate.radius ? *cfg.estimate.radius
                                              : default_estimate_radius(*problem);
    if (cfg.estimate.samples < 50)
      throw ConfigError(cfg.source + ": [estimate] samples must be at least 50");
    const auto fit = estimate_stability(*problem, cfg.estimate.samples, cfg.estimate.seed, radius);
    const double declared = problem->constants().stability_eps;
    const bool ok = std::abs(fit.fitted_eps - declared) <= 0.1;

    Summary sum;
    sum.set("config", cfg.source);
    sum.set("problem", problem->kind());
    sum.set("c_p", space->c_p());
    sum.set("g_q", space->g_q());
    sum.set("radius", radius);
    sum.set("samples", fit.sample_count);
    sum.set("regression_slope", fit.regression_slope);
    sum.set("regression_intercept", fit.regression_intercept);
    sum.set("slope_stderr", fit.slope_stderr);
    sum.set("residual_rms", fit.residual_rms);
    sum.set("fitted_eps", fit.fitted_eps);
    sum.set("fitted_cf", fit.fitted_cf);
    sum.set("declared_eps", declared);
    sum.set("declared_cf", problem->constants().stability_CF);
    sum.set("cf_at_declared_eps", fit.cf_at_declared_eps);
    sum.set("eps_check", std::string(ok ? "pass" : "fail"));

    const auto dir = detail::output_dir(opt, cfg);
    std::filesystem::create_directories(dir);
    {
      auto os = detail::open_out(dir / "stability_fit.csv");
      os << "misfit,bregman,distance,fitted_bound\n";
      for (const auto& s : fit.samples) {
        const double bound = std::exp(fit.regression_intercept) * std::pow(s.misfit, fit.regression_slope);
        os << detail::fmt17(s.misfit) << ',' << detail::fmt17(s.bregman) << ','
           << detail::fmt17(s.distance) << ',' << detail::fmt17(bound) << '\n';
      }
    }
    {
      auto os = detail::open_out(dir / "summary.txt");
      sum.write(os);
    }
    sum.write(out);
    return ok ? exit_ok : exit_check_failed;
  });
}

// ---------------------------------------------------------------------------------------------
// verify

struct SuiteResult
{
  std::string name;
  bool pass{true};
  std::string detail;
};

inline std::vector<std::string> verify_suites() { return {"geometry", "bregman", "adjoint", "recursion"}; }

inline std::vector<std::filesystem::path> shipped_configs(const std::filesystem::path& dir)
{
  std::vector<std::filesystem::path> out;
  if (!std::filesystem::is_directory(dir))
    throw ConfigError("config directory " + dir.string() + " does not exist");
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".ini")
      out.push_back(e.path());
  std::sort(out.begin(), out.end());
  if (out.empty())
    throw ConfigError("no .ini configs in " + dir.string());
  return out;
}

namespace detail {

inline SuiteResult verify_geometry()
{
  SuiteResult r{"geometry", true, {}};
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst_round = 0, worst_prop = 0, worst_hom = 0;
  for (double p : {1.5, 2.0, 3.0, 4.0})
    for (std::size_t n : {1, 2, 10, 100}) {
      const auto sp = SpaceGeometry::make(n, p, p, {}, 1.0, 1.0);
      for (int i = 0; i < 250; ++i) {
        const PrimalVector u(sp, std::exp(2.0 * normal(rng)) * gaussian_coefficients(n, rng));
        const auto j = duality_map(u);
        const auto back = inverse_duality_map(j);
        worst_round = std::max(worst_round, norm(back - u) / norm(u));
        const double nu = norm(u);
        worst_prop = std::max(worst_prop, std::abs(pairing(u, j) - nu * dual_norm(j)) /
                                              (nu * dual_norm(j)));
        worst_prop = std::max(worst_prop,
                              std::abs(dual_norm(j) - std::pow(nu, p - 1.0)) / std::pow(nu, p - 1.0));
        const double lam = 0.5 + std::abs(normal(rng));
        const auto jl = duality_map(lam * u);
        worst_hom = std::max(worst_hom, dual_norm(jl - std::pow(lam, p - 1.0) * j) / dual_norm(jl));
      }
    }
  r.pass = worst_round <= 1e-10 && worst_prop <= 1e-10 && worst_hom <= 1e-10;
  r.detail = "round_trip=" + fmt17(worst_round) + " defining=" + fmt17(worst_prop) +
             " homogeneity=" + fmt17(worst_hom);
  return r;
}

inline SuiteResult verify_bregman()
{
  SuiteResult r{"bregman", true, {}};
  std::ostringstream d;
  for (double p : {1.5, 3.0, 4.0}) {
    const auto est = estimate_convexity_constants(*SpaceGeometry::make(3, p, p, {}, 1, 1), 2000, 5);
    const auto sp = SpaceGeometry::make(3, p, p, {}, est.c_p, est.g_q);
    std::mt19937_64 rng(99);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::size_t viol = 0, total = 0, negative = 0;
    const double q = sp->q();
    for (int i = 0; i < 2000; ++i) {
      const PrimalVector u1(sp, std::exp(1.5 * normal(rng)) * gaussian_coefficients(3, rng));
      const PrimalVector u2(sp, std::exp(1.5 * normal(rng)) * gaussian_coefficients(3, rng));
      const DualVector w1(sp, std::exp(1.5 * normal(rng)) * gaussian_coefficients(3, rng));
      const DualVector w2(sp, std::exp(1.5 * normal(rng)) * gaussian_coefficients(3, rng));
      const double b = bregman(u1, u2);
      const double db = dual_bregman(w1, w2);
      negative += (b < 0.0) + (db < 0.0);
      const double lower = sp->c_p() / p * std::pow(norm(u1 - u2), p);
      const double upper = sp->g_q() / q * std::pow(dual_norm(w1 - w2), q);
      viol += (b < lower * (1.0 - 1e-9)) + (db > upper * (1.0 + 1e-9));
      total += 2;
    }
    const bool ok = negative == 0 && double(viol) <= 1e-3 * double(total);
    r.pass = r.pass && ok;
    d << "p=" << p << " c_p=" << fmt17(sp->c_p()) << " g_q=" << fmt17(sp->g_q())
      << " violations=" << viol << "/" << total << "; ";
  }
  // Hilbert: both inequalities are identities.
  const auto h = SpaceGeometry::hilbert(5);
  std::mt19937_64 rng(7);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const PrimalVector u1(h, gaussian_coefficients(5, rng));
    const PrimalVector u2(h, gaussian_coefficients(5, rng));
    const double n2 = std::pow(norm(u1 - u2), 2.0);
    worst = std::max(worst, std::abs(bregman(u1, u2) - 0.5 * n2) / n2);
  }
  r.pass = r.pass && worst <= 1e-12;
  d << "hilbert_identity=" << fmt17(worst);
  r.detail = d.str();
  return r;
}

inline SuiteResult verify_adjoint(const std::filesystem::path& dir)
{
  SuiteResult r{"adjoint", true, {}};
  std::ostringstream d;
  for (const auto& path : shipped_configs(dir)) {
    const auto cfg = load_experiment(path.string());
    const auto space = build_space(cfg);
    const auto problem = build_problem(cfg, space);
    const double radius = default_estimate_radius(*problem);
    const double adj = adjoint_check(*problem, 1000, radius, 17);
    std::mt19937_64 rng(23);
    double fd = 0;
    const double step = problem->kind() == "resistor_network" ? 1e-6 : 1e-5;
    for (int i = 0; i < 20; ++i) {
      const auto u = sample_norm_ball(*problem->ground_truth(), radius, rng);
      fd = std::max(fd, finite_difference_check(*problem, u, 5, step, 31 + i).max_relative_error);
    }
    const bool ok = adj <= 1e-10 && fd <= 1e-5;
    r.pass = r.pass && ok;
    d << cfg.name << ": adjoint=" << fmt17(adj) << " fd=" << fmt17(fd) << (ok ? "" : " FAIL")
      << "; ";
  }
  r.detail = d.str();
  return r;
}

inline SuiteResult verify_recursion(const std::filesystem::path& dir)
{
  SuiteResult r{"recursion", true, {}};
  std::ostringstream d;
  for (const auto& path : shipped_configs(dir)) {
    auto cfg = load_experiment(path.string());
    cfg.analysis.checks = {"descent", "recursion"};
    const auto ex = build_experiment(cfg);
    const auto res = run_experiment(ex);
    const bool ok = res.all_checks_pass;
    r.pass = r.pass && ok;
    d << cfg.name << ": min_slack=" << *res.summary.get("min_slack")
      << " descent=" << *res.summary.get("descent_numeric") << (ok ? "" : " FAIL") << "; ";
  }
  r.detail = d.str();
  return r;
}

} // namespace detail

/// `verify`: built-in invariant suites over the shipped configs in \p config_dir.
inline int verify_command(const std::filesystem::path& config_dir,
                          const std::optional<std::string>& suite, std::ostream& out,
                          std::ostream& err)
{
  const auto names = verify_suites();
  if (suite && std::find(names.begin(), names.end(), *suite) == names.end()) {
    err << "error: unknown suite '" << *suite << "' (geometry|bregman|adjoint|recursion)\n";
    return exit_bad_input;
  }
  bool all = true;
  std::size_t ran = 0;
  for (const auto& name : names) {
    if (suite && *suite != name)
      continue;
    SuiteResult r;
    try {
      if (name == "geometry")
        r = detail::verify_geometry();
      else if (name == "bregman")
        r = detail::verify_bregman();
      else if (name == "adjoint")
        r = detail::verify_adjoint(config_dir);
      else
        r = detail::verify_recursion(config_dir);
    } catch (const std::exception& e) {
      r = {name, false, std::string("error: ") + e.what()};
    }
    ++ran;
    all = all && r.pass;
    out << "suite " << r.name << ": " << (r.pass ? "PASS" : "FAIL") << "  " << r.detail << "\n";
  }
  out << "verify: " << (all ? "all " : "not all ") << ran << " suite(s) passed\n";
  return all ? exit_ok : exit_check_failed;
}

} // namespace irlw
