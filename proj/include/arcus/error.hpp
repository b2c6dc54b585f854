#pragma once

#include <stdexcept>
#include <string>

namespace arcus {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes of operands do not agree (input width, architecture, lengths).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A precondition on an argument value was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss.
class NumericDivergence : public Error {
public:
    NumericDivergence(int epoch, std::size_t minibatch)
        : Error("non-finite loss at epoch " + std::to_string(epoch) + ", mini-batch " +
                std::to_string(minibatch)),
          epoch_(epoch),
          minibatch_(minibatch) {}

    int epoch() const noexcept { return epoch_; }
    std::size_t minibatch() const noexcept { return minibatch_; }

private:
    int epoch_;
    std::size_t minibatch_;
};

/// A latent representation is constant across the batch, so CKA is undefined.
class DegenerateRepresentation : public Error {
public:
    using Error::Error;
};

/// Malformed input file (CSV stream or scenario).
class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace arcus
