// Batch entry points shared by the CLI binary and the pipeline tests.
// Exit codes: 0 ok, 2 non-convergence, 3 invalid input, 4 verification failure.

#pragma once

#include "nehari/config.hpp"

#include <iosfwd>
#include <string>

namespace nehari::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNoConverge = 2;
inline constexpr int kExitBadInput = 3;
inline constexpr int kExitVerifyFail = 4;

int cmd_spectrum(const RunConfig& cfg, std::ostream& out);
int cmd_solve(const RunConfig& cfg, std::ostream& out);
int cmd_verify(const std::string& solution_path, std::ostream& out);
int cmd_sweep(const RunConfig& cfg, std::ostream& out);
int cmd_oracle(const RunConfig& cfg, std::ostream& out);

}  // namespace nehari::cli
