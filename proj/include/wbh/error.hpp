#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wbh {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A scalar argument is outside its admissible domain (dof <= 0, u not in (0,1), ...).
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// Structurally bad input: dimension mismatch, asymmetric matrix, malformed file.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Cholesky factorization hit a pivot below threshold; the matrix is not positive definite.
class DecompositionFailure : public Error {
public:
    DecompositionFailure(std::size_t pivot, double value)
        : Error("matrix is not positive definite: Cholesky pivot " + std::to_string(pivot) +
                " = " + std::to_string(value) + " is below threshold"),
          pivot_(pivot) {}

    std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

/// An iterative solver ran out of budget or produced a non-finite value.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

/// The regression residual variance is zero (noiseless data), so t-statistics are undefined.
class DegenerateFit : public Error {
public:
    using Error::Error;
};

}  // namespace wbh
