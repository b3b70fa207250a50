#pragma once

#include <stdexcept>
#include <string>

namespace mlc {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Symbol outside a coder's alphabet, or an alphabet too large for the table scale.
class CodingError : public Error {
public:
    using Error::Error;
};

class TableOverflowError : public CodingError {
public:
    using CodingError::CodingError;
};

// rANS stream ran out of bytes, or did not unwind to the initial state.
class DecodeError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Container-level problems. Each subclass is a distinct failure the CLI maps to exit code 2.
class FormatError : public Error {
public:
    using Error::Error;
};

class BadMagicError : public FormatError {
public:
    using FormatError::FormatError;
};

class BadCrcError : public FormatError {
public:
    using FormatError::FormatError;
};

class UnknownVersionError : public FormatError {
public:
    using FormatError::FormatError;
};

class TruncatedError : public FormatError {
public:
    using FormatError::FormatError;
};

// Decoded streams disagree with each other or with the predictor (e.g. rank past the list end).
class IntegrityError : public FormatError {
public:
    using FormatError::FormatError;
};

class AlignmentError : public Error {
public:
    using Error::Error;
};

class PredictorError : public Error {
public:
    using Error::Error;
};

// Wire-protocol violation, including nondeterministic answers to identical queries.
class ProtocolError : public PredictorError {
public:
    using PredictorError::PredictorError;
};

}  // namespace mlc
