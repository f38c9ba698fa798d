// errors.hpp
// Exception types raised by the reflectq library.

#pragma once

#include <stdexcept>
#include <string>

namespace reflectq {

/// Base class for every error the library raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (bad dimensions, invalid states, bad
/// parameters). The CLI maps these to exit code 2.
class InputError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public InputError {
public:
    using InputError::InputError;
};

class NotHermitian : public InputError {
public:
    using InputError::InputError;
};

class InvalidState : public InputError {
public:
    using InputError::InputError;
};

class InvalidEffect : public InputError {
public:
    using InputError::InputError;
};

class InvalidPovm : public InputError {
public:
    using InputError::InputError;
};

class InvalidProbVector : public InputError {
public:
    using InputError::InputError;
};

class InvalidKrausMap : public InputError {
public:
    using InputError::InputError;
};

class NotTracePreserving : public InputError {
public:
    using InputError::InputError;
};

class NotCP : public InputError {
public:
    using InputError::InputError;
};

class NotIsometry : public InputError {
public:
    using InputError::InputError;
};

class NotUnitary : public InputError {
public:
    using InputError::InputError;
};

class NotIdentityDecomposition : public InputError {
public:
    using InputError::InputError;
};

class ParameterOutOfRange : public InputError {
public:
    using InputError::InputError;
};

class InvalidBook : public InputError {
public:
    using InputError::InputError;
};

class StateDependentJudgment : public InputError {
public:
    using InputError::InputError;
};

/// Conditioning on an outcome whose probability is below the floor.
class ZeroProbabilityOutcome : public Error {
public:
    using Error::Error;
};

class ZeroConditioningEvent : public Error {
public:
    using Error::Error;
};

/// A click was conditioned on a state with zero click probability.
class DarkStateJump : public Error {
public:
    using Error::Error;
};

/// The click probability of a single step exceeded the step guard.
class StepTooLarge : public Error {
public:
    StepTooLarge(const std::string& what, double t, double dp)
        : Error(what), t_(t), dp_(dp) {}

    double time() const noexcept { return t_; }
    double click_probability() const noexcept { return dp_; }

private:
    double t_;
    double dp_;
};

class NotConverged : public Error {
public:
    using Error::Error;
};

/// Two algebraically equal routes disagreed; indicates a bug, not bad input.
class InternalDisagreement : public Error {
public:
    using Error::Error;
};

}  // namespace reflectq
