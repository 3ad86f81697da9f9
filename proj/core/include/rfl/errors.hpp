#pragma once

#include <stdexcept>
#include <string>

namespace rfl {

// Exit-code classification used by the command line driver.
enum class ErrorKind { Config = 2, Data = 3, Numeric = 4 };

struct Error : std::runtime_error {
  Error(ErrorKind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
  ErrorKind kind;
};

struct DegenerateInput : Error {
  explicit DegenerateInput(const std::string& m) : Error(ErrorKind::Data, m) {}
};
struct InvalidRange : Error {
  explicit InvalidRange(const std::string& m) : Error(ErrorKind::Config, m) {}
};
struct PatchTooSmall : Error {
  explicit PatchTooSmall(const std::string& m) : Error(ErrorKind::Data, m) {}
};
struct ShapeMismatch : Error {
  explicit ShapeMismatch(const std::string& m) : Error(ErrorKind::Data, m) {}
};
struct TooSmall : Error {
  explicit TooSmall(const std::string& m) : Error(ErrorKind::Data, m) {}
};
struct EmptyMask : Error {
  explicit EmptyMask(const std::string& m) : Error(ErrorKind::Data, m) {}
};
struct InvalidRegion : Error {
  explicit InvalidRegion(const std::string& m) : Error(ErrorKind::Data, m) {}
};
struct UnknownPreset : Error {
  explicit UnknownPreset(const std::string& m) : Error(ErrorKind::Config, m) {}
};
struct IoError : Error {
  explicit IoError(const std::string& m) : Error(ErrorKind::Data, m) {}
};
struct BadCheckpoint : Error {
  explicit BadCheckpoint(const std::string& m) : Error(ErrorKind::Data, m) {}
};
struct SplitMissing : Error {
  explicit SplitMissing(const std::string& m) : Error(ErrorKind::Data, m) {}
};
struct NonFiniteGradient : Error {
  explicit NonFiniteGradient(const std::string& m) : Error(ErrorKind::Numeric, m) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error(ErrorKind::Config, m) {}
};

}  // namespace rfl
