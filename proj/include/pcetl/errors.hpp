#pragma once

#include <stdexcept>
#include <string>

namespace pcetl {

/// Argument outside the domain an operation is defined on (points outside a
/// box, beta outside [0, 1], mismatched sizes).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A regression problem that cannot be solved honestly: under-determined,
/// rank deficient, or conditioned beyond the configured ceiling.
class CalibrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Floating point breakdown: SPD factorization failure, non-finite objective.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed configuration or input file.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace pcetl
