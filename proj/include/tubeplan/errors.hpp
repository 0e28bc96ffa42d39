#pragma once

#include <stdexcept>
#include <string>

namespace tubeplan {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad user input: configs, parameter ranges, inconsistent shapes in configs.
class ValidationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// File exists but is not in the expected format (bad magic, malformed JSON).
class FormatError : public IoError {
public:
    using IoError::IoError;
};

// Format recognized but written by an incompatible version.
class VersionError : public IoError {
public:
    using IoError::IoError;
};

class TruncatedFileError : public IoError {
public:
    using IoError::IoError;
};

// Recorded shapes disagree with payload sizes, or runtime dimension mismatch.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Numerical failure inside the QP/SCP machinery (non-finite iterates, failed
// factorization).
class SolverError : public Error {
public:
    using Error::Error;
};

// Tube metric undefined: no index with w_i >= e_i.
class NoCorrectIndicesError : public Error {
public:
    using Error::Error;
};

}  // namespace tubeplan
