#pragma once

#include <stdexcept>
#include <string>

namespace qualbench {

// Common base so callers can catch anything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dataset loading / validation.
struct MissingFile : Error { using Error::Error; };
struct SchemaViolation : Error { using Error::Error; };
struct DanglingReference : Error { using Error::Error; };
struct DuplicateId : Error { using Error::Error; };

// Prompt rendering.
struct MissingSlot : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };

// Vector math.
struct DimensionMismatch : Error { using Error::Error; };
struct ZeroVector : Error { using Error::Error; };
struct TooFewScores : Error { using Error::Error; };

// Provider gateway.
struct BudgetExceeded : Error { using Error::Error; };
struct ProviderError : Error { using Error::Error; };
// Retryable flavour of ProviderError: connection failures and 5xx responses.
struct ProviderTransient : ProviderError { using ProviderError::ProviderError; };
struct AuthMissing : Error { using Error::Error; };

// Reporting.
struct EmptyReport : Error { using Error::Error; };
struct IoFailure : Error { using Error::Error; };

// Run / model configuration.
struct ConfigError : Error { using Error::Error; };

}  // namespace qualbench
