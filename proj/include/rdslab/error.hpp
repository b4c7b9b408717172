#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace rdslab {

// Every failure the library reports carries a short machine-readable code
// (e.g. "invalid_argument", "disconnected", "stalled") next to the message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

inline Error invalid_argument(const std::string& message) {
  return Error("invalid_argument", message);
}

}  // namespace rdslab
