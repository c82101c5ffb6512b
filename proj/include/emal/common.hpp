#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace emal {

using PairId = std::int64_t;

/// Binary class label; matches are 1.
enum class Label : std::uint8_t { non_match = 0, match = 1 };

inline int to_int(Label l) { return static_cast<int>(l); }
inline Label label_from_int(int v) { return v ? Label::match : Label::non_match; }

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed files, invalid configs, violated preconditions.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Caller asked for something that does not exist (unknown pair, session...).
class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// A request contradicts state that is already fixed (e.g. relabeling a pair).
class ConflictError : public Error {
 public:
  using Error::Error;
};

using Clock = std::chrono::steady_clock;

inline double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace emal
