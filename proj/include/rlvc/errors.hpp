#pragma once

#include <stdexcept>
#include <string>

namespace rlvc {

/// Invalid configuration or input data (dimension mismatch, bad ranges,
/// dataset invariant violations).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// API misuse: an operation called outside its documented precondition.
class UsageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Non-finite losses, gradients or parameters.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rlvc
