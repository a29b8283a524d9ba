#pragma once

#include <stdexcept>
#include <string>

namespace tucker {

/// Invalid argument shapes, extents, or modes.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// Index outside its valid range.
class BoundsError : public std::out_of_range {
 public:
  explicit BoundsError(const std::string& what) : std::out_of_range(what) {}
};

/// Asked a rank for an index it does not own.
class OwnershipError : public std::logic_error {
 public:
  explicit OwnershipError(const std::string& what) : std::logic_error(what) {}
};

/// Collective misuse: mismatched groups, payloads, roots, or sequence numbers.
class ProtocolError : public std::runtime_error {
 public:
  explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

/// Iterative method failed to converge or produced an invalid result.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// File format or filesystem failure.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tucker
