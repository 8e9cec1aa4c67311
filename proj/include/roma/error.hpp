#pragma once

#include <stdexcept>
#include <string>

namespace roma {

// Error classes map 1:1 onto CLI exit codes (see tools/roma_sim.cpp).
enum class ErrorCode {
  kUsage = 2,
  kValidation = 3,
  kCapacity = 4,
  kIo = 5,
};

class RomaError : public std::runtime_error {
 public:
  RomaError(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace roma
