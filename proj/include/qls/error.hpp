#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qls {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Bad input: out-of-range qubit index, non-finite angle, width mismatch, ...
class InvalidArgument : public Error {
  public:
    using Error::Error;
};

/// A cost evaluation was requested after the evaluation budget ran out.
class BudgetExhausted : public Error {
  public:
    using Error::Error;
};

/// A VQLS cost whose denominator <psi|psi> vanished (A|x> ~ 0).
class CostUndefined : public Error {
  public:
    using Error::Error;
};

/// Dense linear algebra failure (singular or numerically singular matrix).
class SingularMatrix : public Error {
  public:
    using Error::Error;
};

/// Thrown by optimizers when the objective itself failed; carries the point.
class EvaluationError : public Error {
  public:
    EvaluationError(const std::string &what, std::vector<double> point)
        : Error(what), point_(std::move(point)) {}

    [[nodiscard]] const std::vector<double> &point() const noexcept { return point_; }

  private:
    std::vector<double> point_;
};

} // namespace qls
