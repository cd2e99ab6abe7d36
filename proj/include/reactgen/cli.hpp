#pragma once

namespace reactgen::cli {

// Full command-line entry point; returns the process exit code
// (0 ok, 2 config error, 3 data error, 4 numerical divergence).
int run(int argc, char** argv);

} // namespace reactgen::cli
