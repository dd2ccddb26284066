// Command-line front end.
//
//   rbo <command> [--config PATH] [--out DIR] [--seed U64] [--threads N] [--quiet]
//
// Commands: verify, ids, dos, gap, wegner, lifshits, dostransform.
// Exit codes: 0 success, 1 verification failure, 2 configuration error,
// 3 numerical failure.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

namespace rbo {

enum ExitCode : int { kExitOk = 0, kExitVerification = 1, kExitConfig = 2, kExitNumerical = 3 };

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace rbo
