#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace shaperate {

/// Configuration rejection (bad key, bad value, unreadable file). Maps to
/// exit code 2; any other failure maps to 3.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunOptions {
    std::string config_path;
    std::string out_dir = ".";
    int threads = 0;  // 0 = auto
    std::optional<std::uint64_t> seed_override;
    // when set (CLI subcommand), must agree with the config's command key;
    // fills it in if the config omits the key
    std::string expected_command;
};

/// Executes the command named in the JSON config and writes results.json plus
/// the command's CSV table under out_dir. Returns the process exit code:
/// 0 success, 2 validation error, 3 runtime failure. Diagnostics go to the
/// returned message (empty on success).
int run_from_config(const RunOptions& opts, std::string& message);

}  // namespace shaperate
