#pragma once

namespace pfmix {

// Entry point for the command-line tool; returns the process exit code
// (0 ok, 1 usage error, 2 run terminated unsolved, 3 I/O error).
int run_cli(int argc, char** argv);

}  // namespace pfmix
