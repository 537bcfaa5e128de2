#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace churn {

// Runs one subcommand (ingest, profile, survival, train, evaluate, report,
// synth). args excludes the program name. Exit codes: 0 success, 1 usage,
// 2 data error, 3 internal error; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view bytes);

}  // namespace churn
