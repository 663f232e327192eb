#pragma once

#include <stdexcept>
#include <string>

namespace wqed {

// Physics-level failures. The CLI maps these to exit code 3 and prints name().
class PhysicsError : public std::runtime_error {
 public:
  PhysicsError(std::string name, const std::string& what)
      : std::runtime_error(name + ": " + what), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

#define WQED_PHYSICS_ERROR(Type)                                   \
  class Type : public PhysicsError {                               \
   public:                                                         \
    explicit Type(const std::string& what) : PhysicsError(#Type, what) {} \
  };

WQED_PHYSICS_ERROR(OffResonant)
WQED_PHYSICS_ERROR(TruncationNotConverged)
WQED_PHYSICS_ERROR(PacketTooWide)
WQED_PHYSICS_ERROR(BasisTooLarge)
WQED_PHYSICS_ERROR(RegionOverlap)
WQED_PHYSICS_ERROR(NoConvergence)
WQED_PHYSICS_ERROR(StepRejected)
WQED_PHYSICS_ERROR(SingularSystem)
WQED_PHYSICS_ERROR(ResonanceMismatch)
WQED_PHYSICS_ERROR(InvalidSpec)

#undef WQED_PHYSICS_ERROR

// Malformed or unknown configuration input. Exit code 2.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0, int column = 0)
      : std::runtime_error(format(what, line, column)), line_(line), column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& what, int line, int column) {
    if (line <= 0) return what;
    return std::to_string(line) + ":" + std::to_string(column) + ": " + what;
  }
  int line_;
  int column_;
};

}  // namespace wqed
