#pragma once

#include <stdexcept>
#include <string>

namespace transcad {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Raised by deserialization on malformed input; the message names the
// offending key or element.
struct ParseError : Error {
  using Error::Error;
};

struct TokenOverflowError : Error {
  using Error::Error;
};

struct MalformedPrimitiveError : Error {
  using Error::Error;
};

struct OpenLoopError : Error {
  using Error::Error;
};

// No boundary point survives CSG filtering (e.g. a cut removed the whole
// solid, or every extrusion is degenerate).
struct EmptySolidError : Error {
  using Error::Error;
};

struct InsufficientPointsError : Error {
  using Error::Error;
};

struct EmptyEvaluationError : Error {
  using Error::Error;
};

}  // namespace transcad
