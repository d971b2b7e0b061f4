#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>

namespace exmig {

struct ProcessResult {
    int exit_code = -1; // -1 when killed
    bool timed_out = false;
    std::string output; // stdout and stderr interleaved
    double duration_s = 0.0;
};

/// Run `command` through /bin/sh in its own process group. On timeout the whole group is
/// killed and the partial output returned. Exit status 127 (command not found) raises
/// EnvironmentError.
ProcessResult run_process(const std::string& command, const std::filesystem::path& cwd,
                          std::chrono::milliseconds timeout, const std::map<std::string, std::string>& env = {});

/// Quote a string for /bin/sh.
std::string shell_quote(std::string_view text);

} // namespace exmig
