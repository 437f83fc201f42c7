#pragma once

#include <stdexcept>
#include <string>

namespace gfs {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File missing/unreadable or malformed content.
struct IoError : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};

// Precondition or invariant violation.
struct InvalidArgument : Error {
  using Error::Error;
};

}  // namespace gfs
