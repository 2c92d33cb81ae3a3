#pragma once

#include <string>
#include <vector>

namespace nwsd {

// Full command-line entry point (args excludes argv[0]). Returns the
// process exit code: 0 ok, 2 config error, 3 I/O or file-format error,
// 4 numeric failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace nwsd
