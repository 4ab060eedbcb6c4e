// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace sphcov {

/// Coarse classification of failures; the CLI maps these onto exit codes.
enum class ErrorKind {
  invalid_argument,
  model_invalid,
  not_psd,
  insufficient_data,
  io,
  numerical,
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

namespace detail {

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) {
    fail(kind, what);
  }
}

}  // namespace detail
}  // namespace sphcov
