// Drives the zrlab executable end to end: exit codes, outputs, determinism.

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "zrlab/config.hpp"
#include "zrlab/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "zrlab_integration";

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + ZRLAB_CLI_PATH + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const std::string& name, const std::string& text) {
  fs::create_directories(kRoot / "configs");
  const auto p = kRoot / "configs" / name;
  std::ofstream(p) << text;
  return p;
}

fs::path fresh(const std::string& name) {
  const auto p = kRoot / name;
  fs::remove_all(p);
  return p;
}

std::string config_dir(const std::string& file) { return std::string(ZRLAB_CONFIG_DIR) + "/" + file; }

const char* kTrajectory = R"({
  "command": "simulate",
  "seed": 5,
  "environment": {"law": {"family": "shifted_beta", "c": 0.5, "a": 2, "b": 1}},
  "model": {"type": "zrp", "L": 200, "horizon": HORIZON, "init": {"mode": "product", "phi": 0.4}, "bins": 10, "batches": 5}
})";

std::string trajectory(const std::string& horizon) {
  std::string s = kTrajectory;
  s.replace(s.find("HORIZON"), 7, horizon);
  return s;
}

}  // namespace

TEST_CASE("precondition failures exit 1") {
  CHECK(run("equilibria --config /nonexistent.json") == 1);
  CHECK(run("equilibria") == 1);
  CHECK(run("nosuchcommand --config x") == 1);
  const auto bad = write_config("bad.json", "{ not json");
  CHECK(run("equilibria --config " + bad.string() + " --out " + fresh("bad").string()) == 1);
  // config written for another subcommand
  CHECK(run("pde --config " + config_dir("equilibria_shifted_beta.json") + " --out " + fresh("mismatch").string()) == 1);
  const auto neg = write_config("neg.json", R"({"command": "simulate", "model": {"L": 10, "horizon": -1}})");
  CHECK(run("simulate --config " + neg.string() + " --out " + fresh("neg").string()) == 1);
}

TEST_CASE("failed acceptance checks exit 2 only with --check") {
  const auto cfg = write_config("wrong_rho.json", R"({
    "command": "equilibria",
    "environment": {"law": {"family": "shifted_beta", "c": 0.5, "a": 2, "b": 1}},
    "experiment": {"expect_rho_star": 3.0}
  })");
  CHECK(run("equilibria --config " + cfg.string() + " --out " + fresh("wrong_a").string()) == 0);
  CHECK(run("equilibria --config " + cfg.string() + " --out " + fresh("wrong_b").string() + " --check") == 2);
  CHECK(run("equilibria --config " + config_dir("equilibria_shifted_beta.json") + " --out " + fresh("right").string() +
            " --check") == 0);
}

TEST_CASE("horizon zero returns the initial configuration") {
  const auto cfg = write_config("h0.json", trajectory("0"));
  const auto out = fresh("h0");
  REQUIRE(run("simulate --config " + cfg.string() + " --out " + out.string()) == 0);
  const auto init = zrlab::read_file(out / "initial_config.csv");
  const auto fin = zrlab::read_file(out / "final_config.csv");
  CHECK(init == fin);
  CHECK(init.size() > 200);
}

TEST_CASE("equal config and seed give byte-identical outputs") {
  const auto cfg = write_config("det.json", trajectory("50"));
  const auto a = fresh("det_a"), b = fresh("det_b"), c = fresh("det_c");
  REQUIRE(run("simulate --config " + cfg.string() + " --out " + a.string()) == 0);
  REQUIRE(run("simulate --config " + cfg.string() + " --out " + b.string()) == 0);
  REQUIRE(run("simulate --config " + cfg.string() + " --out " + c.string() + " --seed 6") == 0);
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("manifest_", 0) == 0) continue;  // holds the wall-clock time
    CHECK_MESSAGE(zrlab::read_file(entry.path()) == zrlab::read_file(b / name), name);
    ++compared;
  }
  CHECK(compared >= 5);
  CHECK(zrlab::read_file(a / "final_config.csv") != zrlab::read_file(c / "final_config.csv"));
}

TEST_CASE("selfcheck flags orphans and missing directories") {
  const auto out = fresh("self");
  REQUIRE(run("oracle --config " + config_dir("oracle_suite.json") + " --out " + out.string() + " --check") == 0);
  CHECK(run("selfcheck --out " + out.string()) == 0);
  std::ofstream(out / "orphan.csv") << "a\n1\n";
  CHECK(run("selfcheck --out " + out.string()) == 2);
  CHECK(run("selfcheck --out " + (kRoot / "does_not_exist").string()) == 1);
}

TEST_CASE("output directory from the environment") {
  const auto env_out = fresh("env_dir"), cli_out = fresh("cli_dir");
  const std::string env = std::string("ZRLAB_OUT_DIR=") + env_out.string();
  const auto cfg = config_dir("equilibria_shifted_beta.json");
  REQUIRE(run("equilibria --config " + cfg, env) == 0);
  CHECK(fs::exists(env_out / "manifest_equilibria.json"));
  CHECK(fs::exists(env_out / "critical_density.json"));
  REQUIRE(run("equilibria --config " + cfg + " --out " + cli_out.string(), env) == 0);
  CHECK(fs::exists(cli_out / "manifest_equilibria.json"));
}
