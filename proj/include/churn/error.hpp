#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace churn {

// Bad input data (malformed rows, unreadable files, degenerate samples).
// Argument and configuration mistakes use std::invalid_argument instead.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Warnings are non-fatal diagnostics (non-convergence, clamped parameters,
// failed search configurations). The default handler writes one line to
// stderr; tests and the CLI may install their own.
using WarningHandler = std::function<void(const std::string&)>;

// Returns the previous handler. An empty handler silences warnings.
WarningHandler set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace churn
