#pragma once

#include <stdexcept>
#include <string>

namespace recap {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No individual was captured in both stages; the study carries no size signal.
class ZeroRecapture : public Error {
public:
    using Error::Error;
};

class NonPositiveWeight : public Error {
public:
    using Error::Error;
};

class EmptySequence : public Error {
public:
    using Error::Error;
};

class InvalidSpec : public Error {
public:
    using Error::Error;
};

class InfeasibleSequence : public Error {
public:
    using Error::Error;
};

class SizeMismatch : public Error {
public:
    using Error::Error;
};

class SampleTooLarge : public Error {
public:
    using Error::Error;
};

class UnknownStratum : public Error {
public:
    using Error::Error;
};

/// Recruitment frontier went empty and the restart budget is spent.
class Exhausted : public Error {
public:
    using Error::Error;
};

class MissingCovariate : public Error {
public:
    using Error::Error;
};

/// An inclusion probability left (0, 1]; refusing to clip silently.
class InvalidNormalization : public Error {
public:
    using Error::Error;
};

class AllRunsDegenerate : public Error {
public:
    using Error::Error;
};

/// Malformed input file; the message carries the offending line number.
class ParseError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace recap
