#pragma once

#include <stdexcept>
#include <string>

namespace mbmm {

// Bad input or configuration: malformed files, invalid parameters, unknown
// levels. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical precondition failed inside the model kernel (probabilities
// outside their support, degenerate post-processing). Maps to exit code 2.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace mbmm
