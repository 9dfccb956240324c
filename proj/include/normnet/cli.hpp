#pragma once

#include "json.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace normnet::cli {

// Flat key/value run configuration; flags override file values before it gets here.
using Config = nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { kOk = 0, kBoundFailure = 1, kConfigError = 2 };

struct CommandResult {
  int exit_code = kOk;
  std::vector<std::string> files;
  std::vector<std::string> lines;  // human-readable summary
};

const std::vector<std::string>& subcommands();
// Keys a subcommand accepts, common ones included.
const std::vector<std::string>& allowed_keys(const std::string& sub);

Config load_config_file(const std::string& path);
// Flag text to a JSON value: numbers, booleans and arrays parse as JSON, anything else stays a string.
nlohmann::json parse_flag_value(const std::string& text);

CommandResult cmd_compile(const Config& cfg);
CommandResult cmd_approx(const Config& cfg);
CommandResult cmd_sobolev(const Config& cfg);
CommandResult cmd_pou(const Config& cfg);
CommandResult cmd_negsearch(const Config& cfg);
CommandResult cmd_verify(const Config& cfg);

// Validates keys, runs the command and maps config problems to exit code 2.
CommandResult run(const std::string& sub, const Config& cfg);

}  // namespace normnet::cli
