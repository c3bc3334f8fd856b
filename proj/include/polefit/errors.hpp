#pragma once

#include <stdexcept>
#include <string>

namespace polefit {

// Base for every error raised by the library. The CLI maps any of these to
// exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Evaluating H(s) at (or numerically on top of) a pole.
class EvaluationError : public Error {
public:
    using Error::Error;
};

// Phase metric undefined because a data sample has zero magnitude.
class MetricError : public Error {
public:
    using Error::Error;
};

class DegenerateModelError : public Error {
public:
    using Error::Error;
};

class IllConditionedError : public Error {
public:
    using Error::Error;
};

class RelocationDegenerateError : public Error {
public:
    using Error::Error;
};

// Complex pair with b^2 <= a^2: no resonance frequency exists.
class DegenerateResonanceError : public Error {
public:
    using Error::Error;
};

class PoleAtOriginError : public Error {
public:
    using Error::Error;
};

}  // namespace polefit
