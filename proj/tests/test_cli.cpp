#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path kTool = V2XSIM_PATH;
const fs::path kConfigs = V2X_CONFIG_DIR;

int run_status(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int run(const std::string& args, const std::string& env = "") {
  return run_status(env + " '" + kTool.string() + "' " + args + " >/dev/null 2>&1");
}

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / "v2x_cli_test" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("shipped presets validate") {
  for (const char* name : {"fig5_convergence.json", "fig3_sweep.json", "fig6_risk.json"})
    CHECK(run("validate --config '" + (kConfigs / name).string() + "'") == 0);
}

TEST_CASE("run writes outputs and is reproducible") {
  const auto dir = scratch("run");
  const auto cfg = (kConfigs / "fig5_convergence.json").string();
  REQUIRE(run("run --config '" + cfg + "' --replications 1 --out '" + (dir / "a").string() + "'") == 0);
  REQUIRE(run("run --config '" + cfg + "' --replications 1 --out '" + (dir / "b").string() + "'") == 0);
  CHECK(slurp(dir / "a" / "metrics.csv") == slurp(dir / "b" / "metrics.csv"));
  CHECK(fs::exists(dir / "a" / "summary.txt"));
  CHECK(fs::exists(dir / "a" / "effective_config.json"));

  REQUIRE(run("run --config '" + cfg + "' --seed 5 --replications 1 --out '" + (dir / "c").string() + "'") == 0);
  CHECK(slurp(dir / "a" / "metrics.csv") != slurp(dir / "c" / "metrics.csv"));
}

TEST_CASE("output directory from the environment") {
  const auto dir = scratch("env");
  const auto cfg = (kConfigs / "fig5_convergence.json").string();
  CHECK(run("convergence --config '" + cfg + "'", "V2X_OUT_DIR='" + dir.string() + "'") == 0);
  CHECK(fs::exists(dir / "convergence.csv"));
}

TEST_CASE("exit codes") {
  const auto dir = scratch("codes");
  write(dir / "bad.json", R"({"bandit": {"arms": [1, 2, 3, 4, 5]}, "rounds": 10})");
  CHECK(run("validate --config '" + (dir / "bad.json").string() + "'") == 2);
  CHECK(run("run --config '" + (dir / "bad.json").string() + "' --out '" + dir.string() + "'") == 2);

  write(dir / "nocat.json", R"({"behavior": {"catalog": "missing.csv"}})");
  CHECK(run("run --config '" + (dir / "nocat.json").string() + "' --out '" + (dir / "o").string() + "'") == 3);
  CHECK(run("validate --config '" + (dir / "absent.json").string() + "'") == 3);

  write(dir / "ok.json", R"({"rounds": 20, "bandit": {"window": 20}})");
  write(dir / "blocker", "x");
  CHECK(run("run --config '" + (dir / "ok.json").string() + "' --out '" + (dir / "blocker" / "x").string() + "'") == 3);

  CHECK(run("") != 0);
  CHECK(run("frobnicate") != 0);
  CHECK(run("run") != 0);
}

TEST_CASE("validation errors list every violation") {
  const auto dir = scratch("msg");
  write(dir / "bad.json", R"({"bandit": {"arms": [1, 2, 3, 4, 5], "window": 500}, "rounds": 10})");
  const auto out = dir / "stderr.txt";
  const std::string cmd = "'" + kTool.string() + "' validate --config '" + (dir / "bad.json").string() +
                          "' 2>'" + out.string() + "'";
  CHECK(run_status(cmd) == 2);
  const auto text = slurp(out);
  CHECK(text.find("bandit.arms") != std::string::npos);
  CHECK(text.find("link.tbs_table") != std::string::npos);
  CHECK(text.find("bandit.window = 500 exceeds rounds = 10") != std::string::npos);
}
