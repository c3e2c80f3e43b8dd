#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tchain {

enum class Errc {
  NonMonotone,
  Uncovered,
  BadParam,
  SupportOutOfDomain,
  BadInterval,
  GridMisaligned,
  GridMismatch,
  NegativeTime,
  BcMismatch,
  BadInitialData,
  NoSufficientGap,
  SingularSystem,
  OutOfMemory,
  EmptyTrajectory,
  Io,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace tchain
