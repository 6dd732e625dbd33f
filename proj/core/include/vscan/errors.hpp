#pragma once

#include <stdexcept>
#include <string>

namespace vscan {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Argument outside its documented domain (bad pixel index, mismatched sizes, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Geometry too degenerate to proceed (collinear points, parallel axes, ...).
class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

/// An operation received an empty input it cannot accept.
class EmptyInputError : public Error {
 public:
  using Error::Error;
};

/// Read from an empty buffer.
class EmptyBufferError : public Error {
 public:
  using Error::Error;
};

/// Too few points to pose the fit.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Solver asked to cold-start on degenerate data with no previous estimate.
class ColdStartError : public Error {
 public:
  using Error::Error;
};

/// Config file syntax or value problem.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace vscan
