#pragma once

#include <stdexcept>
#include <string>

namespace optospring {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad or inconsistent parameters. The CLI maps these to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Numerical failures. The CLI maps these to exit code 4.
class NumericalError : public Error {
public:
    using Error::Error;
};

class DegreeError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class PoleEvaluationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DelayNotAlgebraicError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ImproperSystemError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ContourResolutionError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InsufficientDataError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class CalibrationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Blue-detuned analysis requested with a non-positive spring constant.
class RedDetunedError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

}  // namespace optospring
