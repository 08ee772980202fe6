#pragma once

#include <stdexcept>
#include <string>

namespace vs {

/// Malformed input data: bad UTF-8, truncated files, schema violations.
class InputFormatError : public std::runtime_error {
public:
    explicit InputFormatError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A domain invariant was violated (mismatched sizes, broken vocab, ...).
class InvariantError : public std::runtime_error {
public:
    explicit InvariantError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace vs
