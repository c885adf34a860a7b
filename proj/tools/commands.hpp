#pragma once

#include <atomic>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gcd/graph.hpp"

namespace gcd::cli {

enum ExitCode : int { kOk = 0, kRuntimeError = 1, kUsageError = 2 };

// Runs one command line (args excludes the program name). `stop` is polled
// during training; when it fires, artifacts are left with an `.incomplete`
// suffix and the command returns kRuntimeError.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::atomic<bool>* stop = nullptr);

// `instance_id<TAB>community_id` lines followed by `k=<count>`.
void write_partition(const Partition& partition, const std::filesystem::path& path);
Partition read_partition(const std::filesystem::path& path);

}  // namespace gcd::cli
