#pragma once

#include <stdexcept>
#include <string>

namespace drape {

// Bad arguments, broken invariants, mismatched dimensions.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file; carries a 1-based line number when known.
struct ParseError : std::runtime_error {
  int line = 0;
  ParseError(const std::string& msg, int line_no)
      : std::runtime_error(msg + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite value or numeric blow-up; names the operation that produced it.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace drape
