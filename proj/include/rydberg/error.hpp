#pragma once

#include <stdexcept>
#include <string>

namespace rydberg {

/// Bad input: a config key, override, or operation argument that violates
/// its documented contract. `key()` names the offending field.
class ValidationError : public std::invalid_argument {
public:
    ValidationError(std::string key, const std::string &what)
        : std::invalid_argument(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

    const std::string &key() const noexcept { return key_; }

private:
    std::string key_;
};

/// A numerical procedure that could not deliver its result (no bracket,
/// no convergence, fit failure).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_positive(double value, const char *name) {
    if (!(value > 0.0)) {
        throw ValidationError(name, "must be positive, got " + std::to_string(value));
    }
}

inline void require_non_negative(double value, const char *name) {
    if (!(value >= 0.0)) {
        throw ValidationError(name, "must be non-negative, got " + std::to_string(value));
    }
}

}  // namespace detail
}  // namespace rydberg
