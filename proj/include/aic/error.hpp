#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aic {

// Base for every recoverable failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. Carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// The checkpoint runtime stopped making committed progress.
class LivelockError : public Error {
 public:
  using Error::Error;
};

// Training objective grew across an epoch beyond the configured tolerance.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace aic
