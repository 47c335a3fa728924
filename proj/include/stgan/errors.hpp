#pragma once

#include <stdexcept>
#include <string>

namespace stgan {

// Precondition / API misuse. CLI maps these to exit code 1.
struct ContractError : std::logic_error {
  explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

// Unrecognized file structure (bad magic, bad header fields).
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Structurally valid file with an inconsistent payload (truncation, size mismatch).
struct CorruptionError : std::runtime_error {
  explicit CorruptionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem-level failure. CLI maps these to exit code 2.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Text input that does not parse; carries a 1-based line number when known.
struct ParseError : std::runtime_error {
  int line = 0;
  ParseError(const std::string& msg, int line_no)
      : std::runtime_error(msg + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Requested more than the data can provide (e.g. crop count over tile capacity).
struct CapacityError : std::runtime_error {
  explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite loss or gradient during optimization. CLI maps these to exit code 3.
struct NumericalFault : std::runtime_error {
  explicit NumericalFault(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace stgan
