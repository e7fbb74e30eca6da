#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "zrlab/commands.hpp"
#include "zrlab/config.hpp"

using namespace zrlab;
namespace fs = std::filesystem;

namespace {

const char* kSample = R"({
  "command": "equilibria",
  "seed": 42,
  "environment": {"law": {"family": "shifted_beta", "c": 0.5, "a": 2, "b": 1}, "rate": {"type": "geometric"}},
  "pde": {"rho_max": 4},
  "output": {"dir": "out/x"}
})";

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("zrlab_unit_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("parse, serialize, parse is the identity") {
    const auto a = ExperimentConfig::parse(kSample);
    CHECK(a.command == "equilibria");
    CHECK(a.seed == 42);
    const auto b = ExperimentConfig::parse(a.serialize());
    CHECK(a == b);
    CHECK(a.serialize() == b.serialize());
  }

  TEST_CASE("hash ignores the output directory but not the seed") {
    auto a = ExperimentConfig::parse(kSample);
    auto b = a;
    b.output["dir"] = "elsewhere";
    CHECK(a.hash() == b.hash());
    b.seed = 43;
    CHECK(a.hash() != b.hash());
    CHECK(a.hash().size() == 16);
  }

  TEST_CASE("malformed configs are rejected") {
    CHECK_THROWS_AS(ExperimentConfig::parse("{"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse(R"({"seed": 1})"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse(R"({"command": "pde", "bogus": 1})"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse(R"({"command": "pde", "pde": 3})"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/zrlab.json"), ConfigError);
  }

  TEST_CASE("typed decoders") {
    const auto law = parse_law(nlohmann::json::parse(R"({"family": "finite_support", "atoms": [{"value": 0.5, "weight": 0.25}, {"value": 1.0, "weight": 0.75}]})"));
    CHECK(law.c() == 0.5);
    CHECK(law.has_atom_at_c());
    CHECK(parse_law(law_to_json(law)) == law);
    CHECK(parse_law("homogeneous") == DisorderLaw::homogeneous());
    CHECK_THROWS_AS(parse_law(nlohmann::json::parse(R"({"family": "cauchy"})")), ConfigError);

    CHECK(parse_rate(nlohmann::json::parse(R"({"type": "capped_linear", "cap": 2})"))(5) == 2.0);
    CHECK(parse_kernel(nlohmann::json::parse(R"({"type": "nearest_neighbor", "p_right": 0.75})")).drift() == doctest::Approx(0.5));
    CHECK(parse_profile(nlohmann::json::parse(R"({"type": "step", "left": 1, "right": 0, "at": 0.5})"))(0.4) == 1.0);
    CHECK(parse_test_function(nlohmann::json::parse(R"({"shape": "gaussian", "center": 0, "width": 1})")).shape == TestShape::TruncatedGaussian);
    CHECK(parse_init_mode("A4") == InitMode::A4);
    CHECK_THROWS_AS(parse_init_mode("A3"), ConfigError);
    CHECK(parse_model("kexclusion") == Model::KExclusion);
  }

  TEST_CASE("manifest json round trip") {
    RunManifest m;
    m.command = "pde";
    m.config_hash = "abc";
    m.run_id = "def";
    m.outputs = {{"a.csv", 3, 40}};
    m.seeds = {{"dyn", 7}};
    m.wall_clock_seconds = 1.5;
    const auto back = RunManifest::from_json(m.to_json());
    CHECK(back.command == "pde");
    CHECK(back.outputs.size() == 1);
    CHECK(back.outputs[0].rows == 3);
    CHECK(back.seeds[0].seed == 7);
    CHECK(back.version == kToolVersion);
  }

  TEST_CASE("output set writes files and a manifest that self-checks") {
    const auto dir = scratch("outputs");
    const auto cfg = ExperimentConfig::parse(kSample);
    OutputSet out(dir);
    out.add_csv("a.csv", "x,y\n1,2\n3,4\n");
    out.add_json("b.json", {{"k", 1}});
    out.add_seed("dyn", 11);
    const auto m = out.commit(cfg, 0.1);
    CHECK(fs::exists(dir / "manifest_equilibria.json"));
    CHECK(m.outputs.size() == 2);
    CHECK(m.outputs[0].rows == 2);
    CHECK(self_check(dir).ok());

    std::ofstream(dir / "stray.csv") << "x\n";
    const auto report = self_check(dir);
    CHECK_FALSE(report.ok());
    REQUIRE(report.problems.size() == 1);
    CHECK(report.problems[0].find("stray.csv") != std::string::npos);

    fs::remove(dir / "stray.csv");
    std::ofstream(dir / "a.csv") << "x,y\n1,2\n";
    CHECK_FALSE(self_check(dir).ok());
    fs::remove(dir / "a.csv");
    CHECK_FALSE(self_check(dir).ok());
    CHECK_THROWS_AS(self_check(dir / "missing"), ConfigError);
    fs::remove_all(dir);
  }

  TEST_CASE("output directory precedence") {
    auto cfg = ExperimentConfig::parse(kSample);
    ::unsetenv(kOutDirEnv);
    CHECK(resolve_output_dir(cfg, std::nullopt) == fs::path("out/x"));
    ::setenv(kOutDirEnv, "/tmp/from_env", 1);
    CHECK(resolve_output_dir(cfg, std::nullopt) == fs::path("/tmp/from_env"));
    CHECK(resolve_output_dir(cfg, std::string("cli")) == fs::path("cli"));
    ::unsetenv(kOutDirEnv);
    cfg.output = nlohmann::json::object();
    CHECK(resolve_output_dir(cfg, std::nullopt) == fs::path("out"));
  }

  TEST_CASE("equilibria command end to end") {
    const auto dir = scratch("equilibria");
    const auto outcome = run_command(ExperimentConfig::parse(kSample), dir);
    CHECK(outcome.passed());
    CHECK(outcome.summary["rho_star"].get<double>() == doctest::Approx(2.0));
    CHECK(fs::exists(dir / "flux_table.csv"));
    CHECK(self_check(dir).ok());
    fs::remove_all(dir);
  }
}
