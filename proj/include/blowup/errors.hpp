#pragma once

#include <stdexcept>
#include <string>

namespace blowup {

// Base of every error raised by the library. Numerical failures and usage
// errors are distinguished by type so the CLI can map them to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain (gamma pole, bad parameter, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

// Adaptive routine ran out of budget before meeting its tolerance.
class AccuracyError : public Error {
public:
    AccuracyError(const std::string& what, double achieved)
        : Error(what), achieved_(achieved) {}
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

// The profile IVP left the region where it is defined (|Q| exceeded the guard).
class EscapeError : public Error {
public:
    EscapeError(const std::string& what, double xi) : Error(what), xi_(xi) {}
    double xi() const noexcept { return xi_; }

private:
    double xi_;
};

class StiffnessError : public Error {
public:
    using Error::Error;
};

// Iteration did not converge (Newton, QR sweeps, fixed-point sweeps).
class ConvergenceError : public Error {
public:
    using Error::Error;
};

class DegenerateError : public Error {
public:
    using Error::Error;
};

class UnsupportedOrderError : public Error {
public:
    using Error::Error;
};

class UnreliableDegreeError : public Error {
public:
    using Error::Error;
};

class ExcludedRegionError : public Error {
public:
    using Error::Error;
};

class ResolutionError : public Error {
public:
    using Error::Error;
};

class DoubletNotFoundError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, int line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace blowup
