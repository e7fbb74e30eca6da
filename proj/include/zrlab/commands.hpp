#pragma once

// Subcommand drivers shared by the command-line tool and the acceptance run.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "zrlab/config.hpp"

namespace zrlab {

inline constexpr const char* kOutDirEnv = "ZRLAB_OUT_DIR";

struct CommandOutcome {
  RunManifest manifest;
  nlohmann::json summary = nlohmann::json::object();
  std::vector<std::string> failures;  // acceptance checks declared in the config that did not hold

  bool passed() const noexcept { return failures.empty(); }
};

/// --out beats the environment variable, which beats output.dir, which beats "out".
std::filesystem::path resolve_output_dir(const ExperimentConfig& config, const std::optional<std::string>& cli_out);

/// Runs config.command and writes its outputs plus manifest into `out`.
/// Precondition failures propagate as exceptions.
CommandOutcome run_command(const ExperimentConfig& config, const std::filesystem::path& out);

const std::vector<std::string>& command_names();

}  // namespace zrlab
