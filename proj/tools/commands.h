#pragma once

#include <string>
#include <vector>

namespace posesync::cli {

// Entry point of the posesync tool. Returns the process exit code: 0 on
// success, otherwise one of the codes from pipeline.h (or CLI11's code for
// malformed command lines).
int Run(int argc, const char* const* argv);
int Run(const std::vector<std::string>& args);

}  // namespace posesync::cli
