#pragma once

#include <stdexcept>
#include <string>

namespace hexloop {

// Base of every exception thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed combinatorial input (rotation systems, cycles, edge sets).
struct StructuralError : Error {
  using Error::Error;
};

// A documented precondition of an operation does not hold.
struct PreconditionError : Error {
  using Error::Error;
};

// Parameter outside its admissible range.
struct RangeError : Error {
  using Error::Error;
};

}  // namespace hexloop
