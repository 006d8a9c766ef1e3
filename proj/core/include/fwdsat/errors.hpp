#pragma once

#include <stdexcept>
#include <string>

namespace fwdsat {

// Base class for all library errors. Subcommands map these to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularMatrix : public Error {
public:
    using Error::Error;
};

class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

class NotNegativeDefinite : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class InfeasibleDesign : public Error {
public:
    using Error::Error;
};

class SmallGainViolated : public Error {
public:
    using Error::Error;
};

class InvalidPerturbation : public Error {
public:
    using Error::Error;
};

class WindowNotCovered : public Error {
public:
    using Error::Error;
};

class NoStabilizingRate : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// State norm crossed the overflow guard during integration.
class Divergence : public Error {
public:
    Divergence(const std::string& msg, double escape_time)
        : Error(msg), escape_time(escape_time) {}
    double escape_time;
};

} // namespace fwdsat
