#pragma once

#include <stdexcept>
#include <string>

namespace dcage {

/// Argument outside the mathematical domain of an operation (e.g. negative speed).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Geometry, parameters or scenario content violating an invariant.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed runtime input (sensor buffers and the like).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Wire frames that cannot be decoded or carry an unknown type.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dcage
