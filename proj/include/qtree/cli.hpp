#pragma once

// Command-line front end. Each subcommand writes <out>/<command>.csv and
// <out>/<command>.manifest.json; density, lyapunov and stability also write an
// SVG plot.
//
// Exit codes: 0 success, 1 invalid input, 2 numerical degeneracy.

#include <exception>
#include <iosfwd>
#include <string>

#include "qtree/config.hpp"
#include "qtree/output.hpp"

namespace qtree {

inline constexpr const char* kVersion = "0.1.0";

/// 2 for NumericalError, 1 for anything else.
int exit_code(const std::exception& e);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Computes the table of one subcommand.
Table compute_command(const std::string& command, const RunConfig& config, int threads);

/// compute_command plus CSV, manifest and plot output in `out_dir`.
void run_command(const std::string& command, const RunConfig& config, const std::string& out_dir,
                 int threads);

}  // namespace qtree
