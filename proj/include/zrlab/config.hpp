#pragma once

// Experiment configuration files (JSON, sections environment / model / pde /
// experiment / output) and the run manifest written next to the outputs.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "zrlab/environment.hpp"
#include "zrlab/flux_table.hpp"
#include "zrlab/hydro.hpp"
#include "zrlab/profile.hpp"

namespace zrlab {

inline constexpr const char* kToolVersion = "0.3.0";

/// Thrown for malformed or inconsistent configuration files.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  std::string command;
  std::uint64_t seed = 1;
  nlohmann::json environment = nlohmann::json::object();
  nlohmann::json model = nlohmann::json::object();
  nlohmann::json pde = nlohmann::json::object();
  nlohmann::json experiment = nlohmann::json::object();
  nlohmann::json output = nlohmann::json::object();

  static ExperimentConfig parse(std::string_view text);
  static ExperimentConfig load(const std::filesystem::path& path);
  /// Canonical form: sorted keys, two-space indent.
  std::string serialize() const;
  nlohmann::json to_json() const;
  /// FNV-1a of the canonical form with output.dir removed, hex encoded.
  std::string hash() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Typed decoders. Each throws ConfigError naming the offending key.
DisorderLaw parse_law(const nlohmann::json& j);
nlohmann::json law_to_json(const DisorderLaw& law);
RateFunction parse_rate(const nlohmann::json& j);
JumpKernel parse_kernel(const nlohmann::json& j);
Profile parse_profile(const nlohmann::json& j);
TestFunction parse_test_function(const nlohmann::json& j);
InitMode parse_init_mode(const std::string& s);
Model parse_model(const std::string& s);

/// Reads `key` from `j` or returns `fallback`; type mismatches raise ConfigError.
template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

template <class T>
T require(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("config key '") + key + "' is required");
  return get_or<T>(j, key, T{});
}

struct ManifestOutput {
  std::string path;  // relative to the output directory
  std::size_t rows = 0;
  std::uint64_t bytes = 0;
};

struct SeedEntry {
  std::string label;
  std::uint64_t seed = 0;
};

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::string version = kToolVersion;
  std::string run_id;  // hash of config hash and seed
  std::vector<ManifestOutput> outputs;
  double wall_clock_seconds = 0.0;
  std::vector<SeedEntry> seeds;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// Collects output files, then writes them and the manifest (last, atomically).
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir);

  void add_csv(const std::string& name, std::string content);
  void add_json(const std::string& name, const nlohmann::json& value);
  void add_text(const std::string& name, std::string content);
  void add_seed(std::string label, std::uint64_t seed);

  const std::filesystem::path& dir() const noexcept { return dir_; }
  /// Writes every file then `manifest_<command>.json`; returns the manifest.
  RunManifest commit(const ExperimentConfig& config, double wall_clock_seconds);

 private:
  struct Pending {
    std::string name;
    std::string content;
    std::size_t rows;
  };
  std::filesystem::path dir_;
  std::vector<Pending> files_;
  std::vector<SeedEntry> seeds_;
};

struct SelfCheckReport {
  std::vector<std::string> manifests;
  std::vector<std::string> problems;  // orphans, duplicates, missing files, row mismatches
  bool ok() const noexcept { return problems.empty(); }
};

SelfCheckReport self_check(const std::filesystem::path& dir);

}  // namespace zrlab
