#pragma once

#include <stdexcept>
#include <string>

namespace pforge {

// Exit-code mapping for the CLI: ConfigError -> 1, DataError -> 2,
// GatewayFailure (and subclasses) -> 3.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GatewayFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown by backends for a single failed attempt; the gateway's retry loop
// decides whether to re-attempt based on `transient`.
class BackendError : public GatewayFailure {
 public:
  BackendError(const std::string& msg, bool transient)
      : GatewayFailure(msg), transient_(transient) {}
  bool transient() const { return transient_; }

 private:
  bool transient_;
};

class TransientExhausted : public GatewayFailure {
 public:
  using GatewayFailure::GatewayFailure;
};

class PermanentRejection : public GatewayFailure {
 public:
  using GatewayFailure::GatewayFailure;
};

class CredentialMissing : public GatewayFailure {
 public:
  using GatewayFailure::GatewayFailure;
};

class ScoringUnsupported : public GatewayFailure {
 public:
  using GatewayFailure::GatewayFailure;
};

}  // namespace pforge
