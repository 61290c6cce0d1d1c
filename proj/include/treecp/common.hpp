#pragma once

// Shared vocabulary for the tree contact-process toolkit: vertex handles,
// error types, and the artifact version string echoed in output headers.

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace treecp {

inline constexpr const char* kVersion = "0.1.0";

// Index into a LazyTree arena. Handles are dense and stable: records are
// appended, never moved or removed.
using Handle = std::uint32_t;
inline constexpr Handle kNoVertex = std::numeric_limits<Handle>::max();

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed topology strings, invalid brackets, unknown keys.
struct ConfigError : Error {
  using Error::Error;
};

// Structurally valid request whose result is degenerate (e.g. a growth-rate
// estimate with zero surviving replications).
struct DegenerateResult : Error {
  using Error::Error;
};

}  // namespace treecp
