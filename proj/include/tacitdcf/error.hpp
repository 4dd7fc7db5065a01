#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace tacitdcf {

/// Precondition violated by the caller (bad shape, out-of-range parameter).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced an unusable result (singular system, non-real inverse).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed on-disk data. Binary readers report a byte offset, text readers a
/// 1-based line number.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::optional<std::uint64_t> byte_offset,
              std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(what), byte_offset_(byte_offset), line_(line) {}

  std::optional<std::uint64_t> byte_offset() const noexcept { return byte_offset_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  std::optional<std::uint64_t> byte_offset_;
  std::optional<std::size_t> line_;
};

}  // namespace tacitdcf
