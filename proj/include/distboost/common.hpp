#ifndef DISTBOOST_COMMON_HPP
#define DISTBOOST_COMMON_HPP

#include <stdexcept>
#include <string>

namespace distboost {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Configuration / usage errors (CLI exit code 2).
struct ConfigError : Error {
    using Error::Error;
};
struct BadFraction : ConfigError {
    using ConfigError::ConfigError;
};
struct BadProbability : ConfigError {
    using ConfigError::ConfigError;
};
struct BadTau : ConfigError {
    using ConfigError::ConfigError;
};
struct UnknownFamily : ConfigError {
    using ConfigError::ConfigError;
};

// Data / model errors (CLI exit code 3).
struct DataError : Error {
    using Error::Error;
};
struct MissingColumn : DataError {
    using DataError::DataError;
};
struct NonNumericValue : DataError {
    using DataError::DataError;
};
struct MissingValue : DataError {
    using DataError::DataError;
};
struct EmptyDataset : DataError {
    using DataError::DataError;
};
struct TooFewRows : DataError {
    using DataError::DataError;
};
struct EmptyInput : DataError {
    using DataError::DataError;
};
struct WidthMismatch : DataError {
    using DataError::DataError;
};
struct ZeroDenominator : DataError {
    using DataError::DataError;
};
struct CategoricalUnsupported : DataError {
    using DataError::DataError;
};
struct InvalidValue : DataError {
    using DataError::DataError;
};

// Numerical errors.
struct SupportViolation : DataError {
    using DataError::DataError;
};
struct InvalidParams : DataError {
    using DataError::DataError;
};
struct NoConvergence : DataError {
    using DataError::DataError;
};
struct AllCandidatesFailed : DataError {
    using DataError::DataError;
};

}  // namespace distboost

#endif  // DISTBOOST_COMMON_HPP
