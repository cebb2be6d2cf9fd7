#ifndef PREDUCE_COMMON_HPP
#define PREDUCE_COMMON_HPP

#include <stdexcept>
#include <string>

namespace preduce {

/// Malformed expression text. `position` is a 0-based offset into the input.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, std::size_t position)
        : std::runtime_error(message + " (at position " + std::to_string(position) + ")"),
          position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

/// Evaluation hit a point outside the domain of some node (division by
/// zero, ln of a nonpositive value, ...). The message names the node.
class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two objects built over different coordinate charts were combined.
class ChartMismatchError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A constructor-level validation failed (antisymmetry, Jacobi,
/// classification preconditions, ...).
class StructureError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed user input: definition files, CLI arguments. Separated
/// from StructureError so the CLI can distinguish input errors (exit 2)
/// from validation failures (exit 1).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical procedure failed (Newton divergence, singular matrix,
/// rank deficiency at a converged point, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace preduce

#endif
