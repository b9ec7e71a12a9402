#pragma once

#include <stdexcept>
#include <string>

namespace prunekit {

// Input that violates a documented contract (bad flags, malformed files,
// dimension mismatches). The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem failures. The CLI maps this to exit code 1.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace prunekit
