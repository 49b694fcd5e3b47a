// Command-line front end: run, check-constants, estimate, verify.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "irlw/experiment.hpp"

#ifndef IRLW_CONFIG_DIR
#define IRLW_CONFIG_DIR "configs"
#endif

namespace {

void add_common(CLI::App* cmd, irlw::CommandOptions& opt, std::optional<std::string>& out,
                std::optional<std::uint64_t>& seed)
{
  cmd->add_option("--config", opt.config, "experiment config file")->required();
  cmd->add_option("--out", out, "output directory (overrides [output] directory)");
  cmd->add_option("--seed", seed, "seed for sampling estimators");
  cmd->add_flag("--strict", opt.strict, "treat infeasible convergence-rate hypotheses as errors");
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Iteratively regularized Landweber experiments"};
  app.require_subcommand(1);

  irlw::CommandOptions opt;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> suite;
  std::string verify_dir = IRLW_CONFIG_DIR;

  auto* run = app.add_subcommand("run", "solve, analyse and write trace/analysis/summary files");
  add_common(run, opt, out, seed);
  auto* consts = app.add_subcommand("check-constants", "print the constants table, no iteration");
  add_common(consts, opt, out, seed);
  auto* est = app.add_subcommand("estimate", "fit the stability exponent by sampling");
  add_common(est, opt, out, seed);
  auto* verify = app.add_subcommand("verify", "run the built-in invariant suites");
  verify->add_option("--config", verify_dir, "directory of shipped configs");
  verify->add_option("--suite", suite, "run only this suite")
      ->check(CLI::IsMember(irlw::verify_suites()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : irlw::exit_bad_input;
  }
  opt.out = out;
  opt.seed = seed;
  opt.suite = suite;

  if (*run)
    return irlw::run_command(opt, std::cout, std::cerr);
  if (*consts)
    return irlw::check_constants_command(opt, std::cout, std::cerr);
  if (*est)
    return irlw::estimate_command(opt, std::cout, std::cerr);
  return irlw::verify_command(verify_dir, suite, std::cout, std::cerr);
}
