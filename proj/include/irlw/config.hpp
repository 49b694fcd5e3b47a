#pragma once

/**
 * \file config.hpp
 * \brief Sectioned key=value experiment files.
 *
 *   # comment            ; also a comment
 *   [section]
 *   key = value
 *
 * Keys are validated against a per-section schema; every error carries "file:line".
 */

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "irlw/errors.hpp"
#include "irlw/problems.hpp"
#include "irlw/solver.hpp"

namespace irlw {

namespace detail {

inline std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep)
{
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep))
    out.push_back(trim(item));
  return out;
}

} // namespace detail

/// One parsed value with the line it came from.
struct IniEntry
{
  std::string value;
  int line{0};
};

class IniDocument
{
public:
  using Section = std::map<std::string, IniEntry>;

  static IniDocument parse(std::istream& is, const std::string& source)
  {
    IniDocument doc;
    doc.source_ = source;
    std::string raw;
    std::string current;
    int line = 0;
    while (std::getline(is, raw)) {
      ++line;
      std::string s = raw;
      const auto hash = s.find_first_of("#;");
      if (hash != std::string::npos)
        s = s.substr(0, hash);
      s = detail::trim(s);
      if (s.empty())
        continue;
      if (s.front() == '[') {
        if (s.back() != ']')
          throw ConfigError(doc.where(line) + "unterminated section header '" + s + "'");
        current = detail::trim(s.substr(1, s.size() - 2));
        if (current.empty())
          throw ConfigError(doc.where(line) + "empty section name");
        if (doc.sections_.count(current))
          throw ConfigError(doc.where(line) + "section [" + current + "] appears twice");
        doc.sections_[current];
        doc.section_lines_[current] = line;
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos)
        throw ConfigError(doc.where(line) + "expected 'key = value', got '" + s + "'");
      if (current.empty())
        throw ConfigError(doc.where(line) + "key outside of any [section]");
      const std::string key = detail::trim(s.substr(0, eq));
      const std::string value = detail::trim(s.substr(eq + 1));
      if (key.empty())
        throw ConfigError(doc.where(line) + "empty key");
      auto& sec = doc.sections_[current];
      if (sec.count(key))
        throw ConfigError(doc.where(line) + "duplicate key '" + key + "' in [" + current + "]");
      sec[key] = {value, line};
    }
    return doc;
  }

  static IniDocument load(const std::string& path)
  {
    std::ifstream in(path);
    if (!in)
      throw ConfigError(path + ": cannot open config file");
    return parse(in, path);
  }

  const std::string& source() const { return source_; }
  bool has_section(const std::string& s) const { return sections_.count(s) != 0; }

  const IniEntry* find(const std::string& section, const std::string& key) const
  {
    const auto s = sections_.find(section);
    if (s == sections_.end())
      return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }

  /// Rejects sections and keys outside the schema.
  void check_schema(const std::map<std::string, std::set<std::string>>& schema) const
  {
    for (const auto& [name, sec] : sections_) {
      const auto allowed = schema.find(name);
      if (allowed == schema.end())
        throw ConfigError(where(section_lines_.at(name)) + "unknown section [" + name + "]");
      for (const auto& [key, entry] : sec)
        if (!allowed->second.count(key))
          throw ConfigError(where(entry.line) + "unknown key '" + key + "' in [" + name + "]");
    }
  }

  std::string where(int line) const { return source_ + ":" + std::to_string(line) + ": "; }

  // Typed getters; a missing key yields the fallback.

  std::optional<std::string> get_string(const std::string& section, const std::string& key) const
  {
    const auto* e = find(section, key);
    return e ? std::optional<std::string>(e->value) : std::nullopt;
  }

  std::string require_string(const std::string& section, const std::string& key) const
  {
    const auto* e = find(section, key);
    if (!e)
      throw ConfigError(source_ + ": missing required key '" + key + "' in [" + section + "]");
    return e->value;
  }

  double to_double(const IniEntry& e, const std::string& key) const
  {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(e.value.c_str(), &end);
    if (e.value.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(v))
      throw ConfigError(where(e.line) + "'" + key + "' expects a finite number, got '" + e.value +
                        "'");
    return v;
  }

  std::optional<double> get_double(const std::string& section, const std::string& key) const
  {
    const auto* e = find(section, key);
    return e ? std::optional<double>(to_double(*e, key)) : std::nullopt;
  }

  /// Number, or nullopt for the literal "auto" (and for a missing key).
  std::optional<double> get_double_or_auto(const std::string& section, const std::string& key) const
  {
    const auto* e = find(section, key);
    if (!e || e->value == "auto")
      return std::nullopt;
    return to_double(*e, key);
  }

  std::optional<std::uint64_t> get_uint(const std::string& section, const std::string& key) const
  {
    const auto* e = find(section, key);
    if (!e)
      return std::nullopt;
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(e->value.c_str(), &end, 10);
    if (e->value.empty() || e->value.front() == '-' || *end != '\0' || errno == ERANGE)
      throw ConfigError(where(e->line) + "'" + key + "' expects a non-negative integer, got '" +
                        e->value + "'");
    return std::uint64_t(v);
  }

  std::optional<bool> get_bool(const std::string& section, const std::string& key) const
  {
    const auto* e = find(section, key);
    if (!e)
      return std::nullopt;
    if (e->value == "true" || e->value == "1" || e->value == "yes")
      return true;
    if (e->value == "false" || e->value == "0" || e->value == "no")
      return false;
    throw ConfigError(where(e->line) + "'" + key + "' expects true or false, got '" + e->value +
                      "'");
  }

  std::optional<std::vector<double>> get_list(const std::string& section,
                                              const std::string& key) const
  {
    const auto* e = find(section, key);
    if (!e)
      return std::nullopt;
    std::vector<double> out;
    for (const auto& item : detail::split(e->value, ','))
      out.push_back(to_double(IniEntry{item, e->line}, key));
    return out;
  }

  /// Edge list "a-b, c-d, ...".
  std::optional<std::vector<Edge>> get_edges(const std::string& section,
                                             const std::string& key) const
  {
    const auto* e = find(section, key);
    if (!e)
      return std::nullopt;
    std::vector<Edge> out;
    for (const auto& item : detail::split(e->value, ',')) {
      const auto ends = detail::split(item, '-');
      if (ends.size() != 2 || ends[0].empty() || ends[1].empty() ||
          ends[0].find_first_not_of("0123456789") != std::string::npos ||
          ends[1].find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError(where(e->line) + "edge '" + item + "' is not of the form a-b");
      out.emplace_back(std::stoul(ends[0]), std::stoul(ends[1]));
    }
    return out;
  }

private:
  std::string source_;
  std::map<std::string, Section> sections_;
  std::map<std::string, int> section_lines_;
};

// ---------------------------------------------------------------------------------------------

struct SpaceBlock
{
  std::optional<std::size_t> dimension;
  double p{2.0};
  double r{2.0};
  std::vector<double> weights;
  std::optional<double> c_p; ///< nullopt: estimate (or exact 1 in Hilbert space)
  std::optional<double> g_q;
  std::size_t estimate_samples{10000};
  std::uint64_t seed{1};
};

struct ProblemBlock
{
  std::string kind;
  std::vector<double> singular_values;
  std::vector<double> truth;
  double m{1.5};
  std::optional<double> domain_radius;
  std::size_t boundary_nodes{0};
  std::size_t interior_nodes{0};
  std::vector<Edge> edges;
  std::size_t constant_samples{200};
  std::uint64_t seed{7};
};

struct SolverBlock
{
  std::optional<double> mu; ///< nullopt: mu_factor times the step-size bound
  double mu_factor{0.9};
  bool allow_large_step{false};
  std::optional<double> rho_sq; ///< nullopt: resolved from the constants
  std::string schedule{"zero"};
  double beta_base{0.1};
  double beta_decay{2.0};
  double smoothness_C{1.0};
  double beta_max{0.5};
  std::string variant{"standard"};
  std::size_t max_iterations{10000};
  double residual_tolerance{0.0};
  double gamma_tolerance{1e-9};
  std::string u0{"zero"}; ///< zero | truth | scaled:<f> | comma list
};

struct AnalysisBlock
{
  std::vector<std::string> checks{"descent", "recursion", "envelope", "order"};
  double burn_in{0.2};
  double convergence_target{1e-8};
};

struct EstimateBlock
{
  std::size_t samples{500};
  std::uint64_t seed{42};
  std::optional<double> radius; ///< nullopt: the problem's domain radius
};

struct OutputBlock
{
  std::string directory;
};

struct ExperimentConfig
{
  std::string source;
  std::string name; ///< file stem
  SpaceBlock space;
  ProblemBlock problem;
  SolverBlock solver;
  AnalysisBlock analysis;
  EstimateBlock estimate;
  OutputBlock output;
};

inline const std::map<std::string, std::set<std::string>>& experiment_schema()
{
  static const std::map<std::string, std::set<std::string>> schema{
      {"space", {"dimension", "p", "r", "weights", "c_p", "g_q", "estimate_samples", "seed"}},
      {"problem",
       {"kind", "singular_values", "truth", "m", "domain_radius", "boundary_nodes",
        "interior_nodes", "edges", "constant_samples", "seed"}},
      {"solver",
       {"mu", "mu_factor", "allow_large_step", "rho_sq", "schedule", "beta_base", "beta_decay",
        "smoothness_C", "beta_max", "variant", "max_iterations", "residual_tolerance",
        "gamma_tolerance", "u0"}},
      {"analysis", {"checks", "burn_in", "convergence_target"}},
      {"estimate", {"samples", "seed", "radius"}},
      {"output", {"directory"}},
  };
  return schema;
}

inline const std::set<std::string>& known_checks()
{
  static const std::set<std::string> c{"descent", "recursion", "envelope", "order"};
  return c;
}

inline ExperimentConfig parse_experiment(const IniDocument& doc)
{
  doc.check_schema(experiment_schema());
  ExperimentConfig c;
  c.source = doc.source();
  {
    auto stem = c.source;
    const auto slash = stem.find_last_of("/\\");
    if (slash != std::string::npos)
      stem = stem.substr(slash + 1);
    const auto dot = stem.find_last_of('.');
    c.name = dot == std::string::npos ? stem : stem.substr(0, dot);
  }
  if (!doc.has_section("problem"))
    throw ConfigError(doc.source() + ": missing required section [problem]");

  auto& s = c.space;
  if (auto v = doc.get_uint("space", "dimension")) s.dimension = std::size_t(*v);
  if (auto v = doc.get_double("space", "p")) s.p = *v;
  if (auto v = doc.get_double("space", "r")) s.r = *v;
  if (auto v = doc.get_list("space", "weights")) s.weights = *v;
  s.c_p = doc.get_double_or_auto("space", "c_p");
  s.g_q = doc.get_double_or_auto("space", "g_q");
  if (auto v = doc.get_uint("space", "estimate_samples")) s.estimate_samples = std::size_t(*v);
  if (auto v = doc.get_uint("space", "seed")) s.seed = *v;

  auto& pb = c.problem;
  pb.kind = doc.require_string("problem", "kind");
  if (pb.kind != "diagonal_linear" && pb.kind != "monomial" && pb.kind != "resistor_network") {
    const auto* e = doc.find("problem", "kind");
    throw ConfigError(doc.where(e->line) + "unknown problem kind '" + pb.kind +
                      "' (diagonal_linear|monomial|resistor_network)");
  }
  if (auto v = doc.get_list("problem", "singular_values")) pb.singular_values = *v;
  if (auto v = doc.get_list("problem", "truth")) pb.truth = *v;
  if (auto v = doc.get_double("problem", "m")) pb.m = *v;
  pb.domain_radius = doc.get_double("problem", "domain_radius");
  if (auto v = doc.get_uint("problem", "boundary_nodes")) pb.boundary_nodes = std::size_t(*v);
  if (auto v = doc.get_uint("problem", "interior_nodes")) pb.interior_nodes = std::size_t(*v);
  if (auto v = doc.get_edges("problem", "edges")) pb.edges = *v;
  if (auto v = doc.get_uint("problem", "constant_samples")) pb.constant_samples = std::size_t(*v);
  if (auto v = doc.get_uint("problem", "seed")) pb.seed = *v;

  auto& sv = c.solver;
  sv.mu = doc.get_double_or_auto("solver", "mu");
  if (auto v = doc.get_double("solver", "mu_factor")) sv.mu_factor = *v;
  if (auto v = doc.get_bool("solver", "allow_large_step")) sv.allow_large_step = *v;
  sv.rho_sq = doc.get_double_or_auto("solver", "rho_sq");
  if (auto v = doc.get_string("solver", "schedule")) sv.schedule = *v;
  if (auto v = doc.get_double("solver", "beta_base")) sv.beta_base = *v;
  if (auto v = doc.get_double("solver", "beta_decay")) sv.beta_decay = *v;
  if (auto v = doc.get_double("solver", "smoothness_C")) sv.smoothness_C = *v;
  if (auto v = doc.get_double("solver", "beta_max")) sv.beta_max = *v;
  if (auto v = doc.get_string("solver", "variant")) sv.variant = *v;
  if (auto v = doc.get_uint("solver", "max_iterations")) sv.max_iterations = std::size_t(*v);
  if (auto v = doc.get_double("solver", "residual_tolerance")) sv.residual_tolerance = *v;
  if (auto v = doc.get_double("solver", "gamma_tolerance")) sv.gamma_tolerance = *v;
  if (auto v = doc.get_string("solver", "u0")) sv.u0 = *v;
  if (!(sv.mu_factor > 0.0 && sv.mu_factor < 1.0)) {
    const auto* e = doc.find("solver", "mu_factor");
    throw ConfigError((e ? doc.where(e->line) : doc.source() + ": ") +
                      "mu_factor must lie in (0, 1)");
  }
  if (const auto* e = doc.find("solver", "schedule")) {
    try {
      (void)schedule_kind_from_string(e->value);
    } catch (const ConfigError& err) {
      throw ConfigError(doc.where(e->line) + err.what());
    }
  }
  if (const auto* e = doc.find("solver", "variant")) {
    try {
      (void)variant_from_string(e->value);
    } catch (const ConfigError& err) {
      throw ConfigError(doc.where(e->line) + err.what());
    }
  }

  auto& an = c.analysis;
  if (const auto* e = doc.find("analysis", "checks")) {
    an.checks.clear();
    for (const auto& item : detail::split(e->value, ',')) {
      if (item.empty())
        continue;
      if (!known_checks().count(item))
        throw ConfigError(doc.where(e->line) + "unknown check '" + item +
                          "' (descent|recursion|envelope|order)");
      an.checks.push_back(item);
    }
  }
  if (auto v = doc.get_double("analysis", "burn_in")) an.burn_in = *v;
  if (auto v = doc.get_double("analysis", "convergence_target")) an.convergence_target = *v;

  auto& es = c.estimate;
  if (auto v = doc.get_uint("estimate", "samples")) es.samples = std::size_t(*v);
  if (auto v = doc.get_uint("estimate", "seed")) es.seed = *v;
  es.radius = doc.get_double_or_auto("estimate", "radius");

  if (auto v = doc.get_string("output", "directory")) c.output.directory = *v;
  return c;
}

inline ExperimentConfig load_experiment(const std::string& path)
{
  return parse_experiment(IniDocument::load(path));
}

} // namespace irlw
