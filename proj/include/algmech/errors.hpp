#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace algmech {

// Expression text could not be parsed; `offset` is the byte position of the
// first offending character.
class SyntaxError : public std::runtime_error {
public:
    SyntaxError(std::string msg, std::size_t offset)
        : std::runtime_error(std::move(msg)), offset(offset) {}
    std::size_t offset;
};

// A name that is not a known variable, constant or function.
class UnknownIdentifier : public SyntaxError {
public:
    UnknownIdentifier(std::string msg, std::size_t offset) : SyntaxError(std::move(msg), offset) {}
};

// A function call with the wrong number of arguments.
class ArityError : public SyntaxError {
public:
    ArityError(std::string msg, std::size_t offset) : SyntaxError(std::move(msg), offset) {}
};

// Evaluation hit a point outside a function's domain (log of a non-positive
// value, division by zero, ...).  `offset` locates the offending expression
// node when the function came from parsed text, npos otherwise.
class DomainError : public std::runtime_error {
public:
    explicit DomainError(std::string msg, std::size_t offset = std::string::npos)
        : std::runtime_error(std::move(msg)), offset(offset) {}
    std::size_t offset;
};

// Mismatched vector/matrix extents.
class DimensionError : public std::runtime_error {
public:
    explicit DimensionError(std::string msg) : std::runtime_error(std::move(msg)) {}
};

// Velocity Hessian not invertible at the requested point.
class SingularHessian : public std::runtime_error {
public:
    SingularHessian(std::string msg, double condition)
        : std::runtime_error(std::move(msg)), condition(condition) {}
    double condition;
};

// An operation needed the fibre morphism pair and none was supplied.
class MissingMorphism : public std::runtime_error {
public:
    explicit MissingMorphism(std::string msg) : std::runtime_error(std::move(msg)) {}
};

// Transition matrices not invertible at a sample point.
class SingularTransition : public std::runtime_error {
public:
    explicit SingularTransition(std::string msg) : std::runtime_error(std::move(msg)) {}
};

// Integration produced a NaN/Inf component; `time` is the step at which the
// state went bad.
class NonFiniteState : public std::runtime_error {
public:
    NonFiniteState(std::string msg, double time) : std::runtime_error(std::move(msg)), time(time) {}
    double time;
};

// Input document violated the system-description schema; `path` points at the
// offending field ("payload.lagrangian", "initial.y", ...).
class SchemaError : public std::runtime_error {
public:
    SchemaError(std::string msg, std::string path)
        : std::runtime_error(msg + " (at " + path + ")"), path(std::move(path)) {}
    std::string path;
};

// Catalog identifier not recognised.
class UnknownId : public std::runtime_error {
public:
    explicit UnknownId(std::string msg) : std::runtime_error(std::move(msg)) {}
};

// Catalog parameters outside their legal range.
class BadParams : public std::runtime_error {
public:
    explicit BadParams(std::string msg) : std::runtime_error(std::move(msg)) {}
};

// Report document malformed.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(std::string msg) : std::runtime_error(std::move(msg)) {}
};

// Tensor signature inconsistent with the supplied component data.
class SignatureError : public std::runtime_error {
public:
    explicit SignatureError(std::string msg) : std::runtime_error(std::move(msg)) {}
};

} // namespace algmech
