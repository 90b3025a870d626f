#pragma once

namespace fluidq::cli {

// Full command-line entry point; returns the process exit code
// (0 ok, 1 invalid input, 2 model not positive recurrent).
int run(int argc, const char* const* argv);

}  // namespace fluidq::cli
