#pragma once

#include <string>

namespace fqzkit {

// Full command-line entry point. Parses argv, runs the chosen subcommand,
// and maps failures to exit codes: 1 usage, 2 io, 3 corruption, 4 reference
// mismatch.
int cli_main(int argc, const char* const* argv);

// Rendered help text, for tests that pin the command surface. Pass an empty
// string for the top-level help or a subcommand name.
std::string cli_help(const std::string& subcommand = "");

} // namespace fqzkit
