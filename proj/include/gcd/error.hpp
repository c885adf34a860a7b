#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gcd {

// Raised for bad arguments that violate a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed embedding file. `offset` is a byte offset for binary input and
// a 1-based line number for CSV input.
class ParseError : public std::runtime_error {
 public:
  enum class Kind { kBadHeader, kDimensionMismatch, kNonFinite, kTruncated, kBadValue };

  ParseError(Kind kind, std::uint64_t offset, const std::string& what)
      : std::runtime_error(what), kind_(kind), offset_(offset) {}

  Kind kind() const { return kind_; }
  std::uint64_t offset() const { return offset_; }

 private:
  Kind kind_;
  std::uint64_t offset_;
};

}  // namespace gcd
