#pragma once

#include <stdexcept>
#include <string>

namespace roiadapt {

// Precondition violated by the caller (bad qf, ROI outside frame, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input data: container bytes, CSV rows, checkpoints.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation invoked in the wrong state (stepping a finished episode, ...).
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace roiadapt
