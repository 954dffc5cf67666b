#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "plasthom/io.hpp"

namespace ph = plasthom;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kIdentity = "1 0 0 0 1 0 0 0 1";

fs::path out_dir(const std::string& name) {
  const fs::path p = fs::path(PLASTHOM_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string config(const char* name) {
  return (fs::path(PLASTHOM_CONFIG_DIR) / name).string();
}

// exit code of the CLI; stdout/stderr land next to the outputs for debugging
int run_cli(const std::string& args, const fs::path& dir) {
  const std::string cmd = std::string(PLASTHOM_CLI_PATH) + " " + args + " > " +
                          (dir / "stdout.txt").string() + " 2> " +
                          (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += (c == '\n');
  return n;
}

}  // namespace

TEST(Cli, VersionFlagAndMissingSubcommand) {
  const fs::path dir = out_dir("cli_version");
  EXPECT_EQ(run_cli("--version", dir), 0);
  EXPECT_NE(run_cli("", dir), 0);  // a subcommand is required
}

TEST(Cli, CreatesMissingOutputDirectories) {
  const fs::path dir = out_dir("cli_fresh_out");
  const fs::path fresh = dir / "a" / "b";  // never created by the test
  const int code = run_cli("whom --config " + config("homogeneous.json") +
                               " -F " + kIdentity + " -G " + kIdentity +
                               " --out " + fresh.string(),
                           dir);
  EXPECT_EQ(code, 0);
  EXPECT_TRUE(fs::exists(fresh / "whom.json"));
  EXPECT_TRUE(fs::exists(fresh / "manifest.json"));
}

TEST(Cli, WhomHomogeneousReportsClosedFormAndManifest) {
  const fs::path dir = out_dir("cli_whom");
  const int code = run_cli("whom --config " + config("homogeneous.json") +
                               " --out " + dir.string() + " -F " + kIdentity +
                               " -G " + kIdentity,
                           dir);
  EXPECT_EQ(code, 0);

  const json rep = ph::load_json_file((dir / "whom.json").string());
  EXPECT_TRUE(rep.at("complete").get<bool>());
  // homogeneous weight 1.5 at F = G = I: every ladder rung solves to 1.5*3
  EXPECT_NEAR(rep.at("extrapolated").get<double>(), 4.5, 1e-6);
  EXPECT_LE(rep.at("spread").get<double>(), 1e-9);
  ASSERT_EQ(rep.at("lambdas").size(), 2u);

  const std::string csv = slurp(dir / "whom.csv");
  EXPECT_EQ(csv.substr(0, 34), "lambda,value,iterations,converged\n");
  EXPECT_EQ(line_count(csv), 3u);  // header + one row per ladder rung

  const json manifest = ph::load_json_file((dir / "manifest.json").string());
  EXPECT_EQ(manifest.at("command"), "whom");
  EXPECT_EQ(manifest.at("config_hash").get<std::string>().size(), 16u);
  EXPECT_EQ(manifest.at("output_paths").size(), 2u);
  EXPECT_EQ(manifest.at("tool_version"), ph::version_string);
}

TEST(Cli, WhomRejectsSingularPlasticArgument) {
  const fs::path dir = out_dir("cli_whom_bad_g");
  const int code = run_cli("whom --config " + config("homogeneous.json") +
                               " --out " + dir.string() + " -F " + kIdentity +
                               " -G 0 0 0 0 0 0 0 0 0",
                           dir);
  EXPECT_EQ(code, 1);
  EXPECT_NE(slurp(dir / "stderr.txt").find("input error"), std::string::npos);
}

TEST(Cli, MalformedOrMissingConfigExitsOne) {
  const fs::path dir = out_dir("cli_bad_config");
  const fs::path broken = dir / "broken.json";
  std::ofstream(broken) << "{ not json\n";
  EXPECT_EQ(run_cli("whom --config " + broken.string() + " --out " +
                        dir.string() + " -F " + kIdentity + " -G " + kIdentity,
                    dir),
            1);
  EXPECT_EQ(run_cli("whom --config " + (dir / "absent.json").string() +
                        " --out " + dir.string() + " -F " + kIdentity +
                        " -G " + kIdentity,
                    dir),
            1);
}

TEST(Cli, GeodesicBetweenIdenticalEndpointsIsZero) {
  const fs::path dir = out_dir("cli_geodesic");
  const int code = run_cli("geodesic --config " + config("homogeneous.json") +
                               " --out " + dir.string() + " --F0 " +
                               kIdentity + " --F1 " + kIdentity + " -n 8",
                           dir);
  EXPECT_EQ(code, 0);
  const json rep = ph::load_json_file((dir / "geodesic.json").string());
  EXPECT_LE(rep.at("length").get<double>(), 1e-12);
  EXPECT_TRUE(rep.at("converged").get<bool>());
  EXPECT_EQ(rep.at("nodes").get<int>(), 9);
  const std::string csv = slurp(dir / "geodesic_path.csv");
  EXPECT_EQ(line_count(csv), 10u);  // header + 9 path nodes
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
}

TEST(Cli, ValidateAcceptsCatalogRejectsCubicProbe) {
  const fs::path ok = out_dir("cli_validate_ok");
  EXPECT_EQ(run_cli("validate --config " + config("laminate.json") +
                        " --out " + ok.string(),
                    ok),
            0);
  const json rep = ph::load_json_file((ok / "validate.json").string());
  EXPECT_GE(rep.at("observed_c1").get<double>(),
            rep.at("declared_c1").get<double>() - 1e-9);
  EXPECT_LE(rep.at("observed_c2").get<double>(),
            rep.at("declared_c2").get<double>() + 1e-9);

  const fs::path bad = out_dir("cli_validate_bad");
  EXPECT_EQ(run_cli("validate --config " + config("cubic_probe.json") +
                        " --out " + bad.string(),
                    bad),
            1);
  EXPECT_NE(slurp(bad / "stderr.txt").find("quadratic growth"),
            std::string::npos);
}

TEST(Cli, GluecheckSmokeSatisfiesEveryTrial) {
  const fs::path dir = out_dir("cli_gluecheck");
  const int code = run_cli("gluecheck --config " +
                               config("gluecheck_smoke.json") + " --out " +
                               dir.string(),
                           dir);
  EXPECT_EQ(code, 0);
  const json rep = ph::load_json_file((dir / "gluecheck.json").string());
  EXPECT_TRUE(rep.at("all_satisfied").get<bool>());
  ASSERT_EQ(rep.at("rows").size(), 2u);  // 1 trial x 2 sigma values
  for (const auto& row : rep.at("rows")) {
    EXPECT_TRUE(row.at("satisfied").get<bool>());
    EXPECT_GE(row.at("N").get<int>(), 2);
  }
  EXPECT_EQ(line_count(slurp(dir / "gluecheck.csv")), 3u);
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
}

TEST(Cli, GammaSmokeWritesByteStableTables) {
  const fs::path d1 = out_dir("cli_gamma_1");
  const fs::path d2 = out_dir("cli_gamma_2");
  const std::string base = "gamma --config " + config("experiment_smoke.json");
  EXPECT_EQ(run_cli(base + " --out " + d1.string(), d1), 0);
  EXPECT_EQ(run_cli(base + " --out " + d2.string(), d2), 0);

  const std::string csv = slurp(d1 / "gamma.csv");
  EXPECT_EQ(csv, slurp(d2 / "gamma.csv"));
  EXPECT_EQ(slurp(d1 / "gamma_gaps.csv"), slurp(d2 / "gamma_gaps.csv"));
  EXPECT_EQ(line_count(csv), 4u);  // header + 2 ladder rows + hom row

  const json rep = ph::load_json_file((d1 / "gamma.json").string());
  EXPECT_NEAR(rep.at("min_Fhom").get<double>(), 3.0, 1e-7);
  for (const auto& row : rep.at("rows")) {
    EXPECT_TRUE(row.at("converged").get<bool>());
    EXPECT_LE(row.at("gap").get<double>(), 1e-6);
  }
  EXPECT_EQ(line_count(slurp(d1 / "gamma_gaps.csv")), 3u);
  EXPECT_TRUE(fs::exists(d1 / "manifest.json"));
}
