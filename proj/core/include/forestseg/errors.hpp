// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace forestseg {

/// Invalid argument or inconsistent input data. CLI exit code 1.
class argument_error : public std::runtime_error {
 public:
  explicit argument_error(const std::string& what)
      : std::runtime_error(what) {}
};

/// Malformed file content. Carries the position that failed to parse.
/// CLI exit code 1.
class parse_error : public std::runtime_error {
 public:
  parse_error(const std::string& path, std::size_t line, std::size_t offset,
              const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + " (byte " +
                           std::to_string(offset) + "): " + what),
        line_(line),
        byte_offset_(offset) {}

  std::size_t line() const { return line_; }
  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t line_;
  std::size_t byte_offset_;
};

/// Filesystem-level failure (open, read, write). CLI exit code 2.
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace forestseg
