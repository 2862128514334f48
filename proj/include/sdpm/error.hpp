// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sdpm {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller violated a precondition (bad dimension, non-positive variance, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration document or flag combination.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A numerical quantity left its mathematical domain (non-SPD matrix,
/// negative square-root argument, failed factorization).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Slice sampler had to extend the stick beyond its hard cap, which only
/// happens when the remaining mass underflows.
class DegenerateSliceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ChainFailure : public NumericalError {
public:
    ChainFailure(std::size_t iteration, const std::string& what)
        : NumericalError("chain failed at iteration " + std::to_string(iteration) + ": " + what),
          iteration_(iteration) {}
    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

/// Estimator input carries no information (zero variance, identical draws).
class DegenerateSampleError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A constrained estimating equation has no root in the admissible region.
class ConstraintError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// An EM component lost all its responsibility mass.
class ComponentCollapseError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Metric is not defined for the given inputs (e.g. limited F-measure with
/// no small reference cluster).
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

/// Base for data-format problems reported by the readers.
class FormatError : public Error {
public:
    using Error::Error;
};

class ParseError : public FormatError {
public:
    ParseError(std::size_t line, const std::string& what)
        : FormatError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class UnsupportedFeatureError : public FormatError {
public:
    UnsupportedFeatureError(std::string keyword, const std::string& what)
        : FormatError(keyword + ": " + what), keyword_(std::move(keyword)) {}
    const std::string& keyword() const noexcept { return keyword_; }

private:
    std::string keyword_;
};

class CorruptFileError : public FormatError {
public:
    using FormatError::FormatError;
};

class CorruptResultsError : public FormatError {
public:
    using FormatError::FormatError;
};

}  // namespace sdpm
