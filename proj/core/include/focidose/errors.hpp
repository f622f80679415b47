#pragma once

#include <stdexcept>
#include <string>

namespace focidose {

// Base for everything this library throws. The CLI maps FociDoseError to
// exit code 1 and reserves 2 for usage errors.
class FociDoseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid input values: out-of-range arguments, malformed parameter sets.
class DomainError : public FociDoseError {
public:
    using FociDoseError::FociDoseError;
};

// A parameter left its configured support (box bounds, simplex).
class BoundaryError : public DomainError {
public:
    using DomainError::DomainError;
};

// Non-finite intermediate or result, failed factorization, unmet tolerance.
class NumericError : public FociDoseError {
public:
    using FociDoseError::FociDoseError;
};

// File or text format problems; message carries line/column where known.
class ParseError : public FociDoseError {
public:
    using FociDoseError::FociDoseError;
};

// Mode search did not produce a usable maximum.
class CalibrationError : public FociDoseError {
public:
    using FociDoseError::FociDoseError;
};

}  // namespace focidose
