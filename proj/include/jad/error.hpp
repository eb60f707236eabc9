#pragma once

#include <stdexcept>
#include <string>

namespace jad {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes or dimensions that do not chain.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A scalar parameter outside its admissible range (alpha, quality, eps, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Malformed checkpoint, IDX or image file.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Non-finite input or a numeric routine that cannot proceed.
class NumericError : public Error {
public:
    using Error::Error;
};

/// log(sigma_min) is undefined because a regularized weight matrix is singular.
class SingularWeightError : public NumericError {
public:
    SingularWeightError(const std::string& what, std::size_t layer, long epoch = -1)
        : NumericError(what), layer_(layer), epoch_(epoch) {}

    std::size_t layer() const { return layer_; }
    long epoch() const { return epoch_; }

private:
    std::size_t layer_;
    long epoch_;
};

/// Requested a gradient of a loss that has no differentiable path.
class UnsupportedLossError : public Error {
public:
    using Error::Error;
};

/// Invalid run configuration (unknown key, unparsable or out-of-range value).
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace jad
