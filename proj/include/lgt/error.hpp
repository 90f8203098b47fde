#pragma once

#include <stdexcept>
#include <string>

namespace lgt {

enum class ErrorKind {
  kInvalidParameter,
  kRejectedStep,
  kInvalidNode,
  kProtocolViolation,
  kTopologyMismatch,
  kIntegrationFailure,
  kDrainFailure,
  kInvalidInstance,
  kInputError,
  kInternal,
};

const char* ToString(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(ToString(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace lgt
