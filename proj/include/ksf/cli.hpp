#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace ksf::cli {

enum ExitCode : int { kPass = 0, kAssertion = 1, kConfigError = 2, kRuntimeAbort = 3 };

const std::vector<std::string>& command_names();

// Sets a dotted key ("perturbation.amplitude=1e-3"). The value is parsed as JSON, falling back to a string.
void apply_override(nlohmann::json& cfg, const std::string& assignment);

struct Invocation {
    std::string command;
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    std::string input;
    std::optional<std::uint64_t> seed;
    int threads = 0;
};

// Config file (if any), then overrides, then --seed.
nlohmann::json load_config(const Invocation& inv);

struct CommandResult {
    bool pass = true;
    nlohmann::json report;
};

// Throws std::invalid_argument / nlohmann::json::exception on configuration errors.
CommandResult run_command(const Invocation& inv, const nlohmann::json& cfg);

// Parses argv, dispatches, writes report.json under --out, and maps failures to exit codes.
int main(int argc, char** argv);

}  // namespace ksf::cli
