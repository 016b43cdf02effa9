// SPDX-License-Identifier: Apache-2.0
//
// Minimal popen wrapper for driving the dumix binary from tests. The
// binary's path arrives via the DUMIX_CLI environment variable, set by
// CTest.
#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

#include <sys/wait.h>

namespace testutil {

inline const char* cli_path_or_null() { return std::getenv("DUMIX_CLI"); }

struct RunResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr combined
};

inline RunResult run_cli(const std::string& args) {
    RunResult result;
    const char* cli = cli_path_or_null();
    if (!cli) return result;
    std::string command = std::string(cli) + " " + args + " 2>&1";
    FILE* pipe = popen(command.c_str(), "r");
    if (!pipe) return result;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof(buf), pipe)) result.output.append(buf, n);
    int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

}  // namespace testutil
