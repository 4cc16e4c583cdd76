#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace occlp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {
inline std::string format_vector(const std::vector<double>& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(v[i]);
    }
    return s + ")";
}
} // namespace detail

/// No admissible control exists at a state (the system is not viable there).
class AssumptionIViolation : public Error {
public:
    explicit AssumptionIViolation(std::vector<double> y)
        : Error("no admissible control at state " + detail::format_vector(y)), state(std::move(y)) {}
    std::vector<double> state;
};

/// Two concentration points share a state but carry different controls.
class AssumptionIIViolation : public Error {
public:
    explicit AssumptionIIViolation(std::vector<double> y)
        : Error("atoms at state " + detail::format_vector(y) + " carry different controls"),
          state(std::move(y)) {}
    std::vector<double> state;
};

class InadmissibleTransition : public Error {
public:
    using Error::Error;
};

class UnknownProblem : public Error {
public:
    explicit UnknownProblem(const std::string& name) : Error("unknown problem '" + name + "'") {}
};

class InsufficientGrid : public Error {
public:
    using Error::Error;
};

class LpInfeasible : public Error {
public:
    using Error::Error;
};

class LpUnbounded : public Error {
public:
    using Error::Error;
};

class SolverStalled : public Error {
public:
    using Error::Error;
};

class EmptyMeasure : public Error {
public:
    EmptyMeasure() : Error("every atom fell below the discard threshold") {}
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace occlp
