#pragma once

#include <stdexcept>
#include <string>

namespace spindecay {

// Domain failures. The CLI maps all of these to exit code 1.
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleError : DomainError {
  using DomainError::DomainError;
};

struct CapExceeded : DomainError {
  using DomainError::DomainError;
};

struct ParameterError : DomainError {
  using DomainError::DomainError;
};

struct GenerationFailure : DomainError {
  using DomainError::DomainError;
};

}  // namespace spindecay
