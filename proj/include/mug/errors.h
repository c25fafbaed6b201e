#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mug {

// Operand shapes do not agree.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Index or id outside its valid range.
struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// Non-finite value where a finite one is required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input violates a documented precondition (bad config, bad graph, ...).
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A corpus record could not be read. `line` is 1-based, 0 when unknown.
struct ParseError : std::runtime_error {
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line(line) {}
  std::size_t line;
};

}  // namespace mug
