#pragma once

#include <cstdint>
#include <functional>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "qdag/error.hpp"
#include "qdag/io.hpp"

namespace qdagx {

namespace fs = std::filesystem;

/// What was typed after the subcommand, kept verbatim for the manifest.
struct Invocation {
  std::string command;
  std::vector<std::string> args;
  std::string started;
};

/// Exit codes: 0 ok, 2 usage, 3 bad input/config, 4 I/O, 5 replay mismatch, 1 anything else.
enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kInput = 3, kIo = 4, kMismatch = 5 };

/// One-line machine-readable error for stderr.
std::string error_json(const std::string& kind, const std::string& message);

/// QDAGX_WORKERS when set and positive, otherwise hardware concurrency.
int default_workers();

/// Runs fn(i) for i in [0, count) on up to `workers` threads; rethrows the first failure.
void parallel_for(int count, int workers, const std::function<void(int)>& fn);

/// Hashes for a file, or for every file below a directory (keyed "dir/rel").
void hash_input(const fs::path& path, std::map<std::string, std::string>& into);

/// Writes the manifest for `dir`, hashing everything already written there.
void finish_manifest(const fs::path& dir, const Invocation& inv, const std::string& config_json,
                     std::uint64_t seed, const std::vector<fs::path>& inputs);

/// Copy of args with the value of `flag` replaced (or appended when absent).
std::vector<std::string> with_flag(std::vector<std::string> args, const std::string& flag,
                                   const std::string& value);
/// Copy of args with every occurrence of `flag` and its value removed.
std::vector<std::string> without_flag(std::vector<std::string> args, const std::string& flag);

std::string tau_dir_name(double tau);
/// Archive directories below a fit output (or the directory itself when it is one), sorted by tau.
std::vector<fs::path> archive_dirs(const fs::path& fit_dir);

/// Node names saved next to an archive, or Y1..Yp.
std::vector<std::string> node_names(const fs::path& archive_dir, int p);

}  // namespace qdagx
