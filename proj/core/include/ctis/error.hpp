#pragma once

#include <stdexcept>
#include <string>

namespace ctis {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed HCUB/HIMG/CSV/matrix input.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Shapes that do not agree (cube vs geometry, image vs matrix, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A value outside its domain (negative intensity, zero exposure, ...).
class ValueError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failures.
class IoError : public Error {
 public:
  using Error::Error;
};

[[noreturn]] void throw_dimension(const std::string& what, std::size_t expected,
                                  std::size_t actual);

}  // namespace ctis
