#pragma once

// Command-line front end. `cli_main` parses flags; `run` executes one suite,
// writes results.csv and summary.json (plus oracle_snapshot.json for the
// rate commands) and returns the process exit status.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

namespace rfkpca {

enum class Command { spectrum, rates, transition, bounds, concentration };

struct RunConfig {
  Command command = Command::rates;
  std::string config_path;
  std::string output_dir = ".";
  std::optional<std::uint64_t> seed;  // overrides the config file's seed
  std::optional<unsigned> threads;    // 0: auto; unset: config file or auto
};

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitAssertion = 2,
  kExitNumeric = 3,
};

Command command_from_string(std::string_view s);

/// SHA-1 of "blob <size>\0<content>", as printed by git hash-object.
std::string git_blob_sha1(std::string_view content);

int run(const RunConfig& config, std::ostream& out, std::ostream& err);

int cli_main(int argc, char** argv);

}  // namespace rfkpca
