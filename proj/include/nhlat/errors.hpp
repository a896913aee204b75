#pragma once

#include <stdexcept>
#include <string>

namespace nhlat {

// Error classes map onto CLI exit codes: config 2, numeric 3, io 4.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Thrown when an eigendecomposition or biorthogonal workflow is beyond the
// reliable conditioning range; carries the estimate so callers can report it.
class IllConditionedError : public NumericError {
public:
    IllConditionedError(const std::string& msg, double cond)
        : NumericError(msg), cond_estimate(cond) {}
    double cond_estimate;
};

} // namespace nhlat
