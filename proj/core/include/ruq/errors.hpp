#pragma once

#include <stdexcept>
#include <string>

namespace ruq {

// Raised for malformed inputs: unreadable files, schema violations, shape
// mismatches, violated container invariants. The CLI maps this to exit
// code 1; any other exception is an internal error and maps to 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
  ValidationError(const std::string& stage, const std::string& what)
      : std::runtime_error(stage + ": " + what) {}
};

}  // namespace ruq
