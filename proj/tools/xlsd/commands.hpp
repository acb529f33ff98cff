#pragma once

// Command-line front end. Exit codes: 0 success, 1 user error (bad flags or
// input files), 2 internal error.
int run_command_line(int argc, const char* const* argv);
