#pragma once

#include <stdexcept>
#include <string>

namespace hyperangle {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad arguments or configuration supplied by the caller.
class UsageError : public Error {
public:
    using Error::Error;
};

// Inputs that should satisfy a model invariant (hyperboloid, group) but do not.
class InvariantError : public Error {
public:
    using Error::Error;
};

// Operation undefined at the given input (e.g. angle to the base point).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    NumericalError(const std::string& what, double achieved)
        : Error(what + " (achieved error estimate " + std::to_string(achieved) + ")"),
          achieved_(achieved) {}
    double achieved() const { return achieved_; }

private:
    double achieved_;
};

class ResourceError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, long line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

// Spectrum recovery ran out of detectable kinks.
class ExhaustionError : public Error {
public:
    using Error::Error;
};

// Non-integer multiplicity ratio or similar inconsistency in spectrum recovery.
class DiagnosticError : public Error {
public:
    using Error::Error;
};

}  // namespace hyperangle
