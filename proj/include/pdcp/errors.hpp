#pragma once

#include <stdexcept>
#include <string>

namespace pdcp {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct ShapeMismatch : Error {
  explicit ShapeMismatch(const std::string& what) : Error("ShapeMismatch: " + what) {}
};

struct NonFinite : Error {
  explicit NonFinite(const std::string& what) : Error("NonFinite: " + what) {}
};

struct NoTape : Error {
  explicit NoTape(const std::string& what) : Error("NoTape: " + what) {}
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& what) : Error("InvalidArgument: " + what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error("IoError: " + what) {}
};

}  // namespace pdcp
