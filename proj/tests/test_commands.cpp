#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "irlw/experiment.hpp"

using namespace irlw;
namespace fs = std::filesystem;

namespace {

const std::string configs = IRLW_CONFIG_DIR;
const std::string fixtures = IRLW_TEST_FIXTURES;

fs::path scratch(const std::string& name)
{
  const auto dir = fs::temp_directory_path() / ("irlw_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Outcome
{
  int code;
  std::string out, err;
};

template <class Cmd>
Outcome invoke(Cmd cmd, const std::string& config, const fs::path& out_dir, bool strict = false)
{
  CommandOptions opt;
  opt.config = config;
  opt.out = out_dir.string();
  opt.strict = strict;
  std::ostringstream out, err;
  const int code = cmd(opt, out, err);
  return {code, out.str(), err.str()};
}

} // namespace

TEST(RunCommand, DiagonalConfigSucceedsAndWritesArtifacts)
{
  const auto dir = scratch("run_diag");
  const auto r = invoke(run_command, configs + "/diag_hilbert.ini", dir);
  EXPECT_EQ(r.code, exit_ok) << r.err;
  for (const char* f : {"trace.csv", "analysis.csv", "summary.txt", "resolved_config.ini"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto summary = slurp(dir / "summary.txt");
  EXPECT_NE(summary.find("recursion_criterion=min_slack>=-1e-12"), std::string::npos);
  EXPECT_NE(summary.find("status=gamma_converged"), std::string::npos);
  EXPECT_NE(summary.find("hypotheses=not-satisfied"), std::string::npos);
  EXPECT_NE(r.err.find("Assumption 3.1(7)"), std::string::npos);
  EXPECT_EQ(slurp(dir / "analysis.csv").substr(0, 36), "k,gamma,bound,slack,eta,cond_3_27\n0,");
}

TEST(RunCommand, BadInputsExitTwo)
{
  const auto dir = scratch("run_bad");
  const auto large = invoke(run_command, fixtures + "/large_step.ini", dir);
  EXPECT_EQ(large.code, exit_bad_input);
  EXPECT_NE(large.err.find("Eq. (3.3)"), std::string::npos);
  EXPECT_EQ(invoke(run_command, fixtures + "/unknown_kind.ini", dir).code, exit_bad_input);
  EXPECT_EQ(invoke(run_command, fixtures + "/missing.ini", dir).code, exit_bad_input);
  const auto strict = invoke(run_command, configs + "/diag_hilbert.ini", dir, true);
  EXPECT_EQ(strict.code, exit_bad_input);
  EXPECT_NE(strict.err.find("Assumption 3.1(7)"), std::string::npos);
}

TEST(RunCommand, RepeatedRunsAreByteIdentical)
{
  const auto a = scratch("det_a"), b = scratch("det_b");
  ASSERT_EQ(invoke(run_command, configs + "/monomial_m150.ini", a).code, exit_ok);
  ASSERT_EQ(invoke(run_command, configs + "/monomial_m150.ini", b).code, exit_ok);
  for (const char* f : {"trace.csv", "analysis.csv", "resolved_config.ini"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(RunCommand, ResolvedConfigReproducesTrace)
{
  const auto a = scratch("resolved_a"), b = scratch("resolved_b");
  ASSERT_EQ(invoke(run_command, configs + "/resistor_network.ini", a).code, exit_ok);
  ASSERT_EQ(invoke(run_command, (a / "resolved_config.ini").string(), b).code, exit_ok);
  EXPECT_EQ(slurp(a / "trace.csv"), slurp(b / "trace.csv"));
  EXPECT_EQ(slurp(a / "analysis.csv"), slurp(b / "analysis.csv"));
}

TEST(CheckConstants, UnitDiagonalTable)
{
  const auto dir = scratch("cc");
  const auto r = invoke(check_constants_command, fixtures + "/unit_diag.ini", dir);
  EXPECT_EQ(r.code, exit_ok) << r.err;
  EXPECT_NE(r.out.find("mu_max=0.5\n"), std::string::npos);
  EXPECT_NE(r.out.find("K_p=5.208"), std::string::npos);
  EXPECT_NE(r.out.find("beta_admissible_max=INFEASIBLE"), std::string::npos);
  EXPECT_NE(r.out.find("rho_squared=inf"), std::string::npos);
}

TEST(Estimate, FittedExponentsAndBadRadius)
{
  const auto dir = scratch("est");
  const auto m = invoke(estimate_command, configs + "/monomial_m150.ini", dir);
  EXPECT_EQ(m.code, exit_ok) << m.err;
  EXPECT_NE(m.out.find("eps_check=pass"), std::string::npos);
  EXPECT_EQ(slurp(dir / "stability_fit.csv").substr(0, 36), "misfit,bregman,distance,fitted_bound");
  EXPECT_EQ(invoke(estimate_command, configs + "/diag_hilbert.ini", dir).code, exit_ok);
  const auto zero = invoke(estimate_command, fixtures + "/zero_radius.ini", dir);
  EXPECT_EQ(zero.code, exit_bad_input);
  EXPECT_NE(zero.err.find("radius"), std::string::npos);
}

TEST(Verify, ShippedSuitesPassAndFilterWorks)
{
  std::ostringstream out, err;
  EXPECT_EQ(verify_command(configs, std::string("bregman"), out, err), exit_ok);
  EXPECT_NE(out.str().find("suite bregman: PASS"), std::string::npos);
  EXPECT_EQ(out.str().find("suite geometry"), std::string::npos);
  std::ostringstream o2, e2;
  EXPECT_EQ(verify_command(configs, std::string("nope"), o2, e2), exit_bad_input);
}

TEST(Verify, CorruptedConfigFailsNamingSuite)
{
  std::ostringstream out, err;
  EXPECT_EQ(verify_command(fixtures + "/corrupted", std::string("adjoint"), out, err),
            exit_check_failed);
  EXPECT_NE(out.str().find("suite adjoint: FAIL"), std::string::npos);
}
