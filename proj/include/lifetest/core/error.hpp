#pragma once

#include <stdexcept>
#include <string>

namespace lifetest {

/// Error codes carried by lifetest::Error. Names match the failure modes of
/// the operations that raise them; the CLI maps them onto exit classes.
enum class Errc {
    // lookup / selection
    NoMatch,
    Ambiguous,
    UnknownId,
    // numeric kernels
    TooFewPoints,
    NonMonotoneX,
    GridOutOfDomain,
    LengthMismatch,
    MapeUndefined,
    R2Undefined,
    ConstantInput,
    // model fitting
    EmptyInput,
    NonFiniteInput,
    DimensionMismatch,
    TooFewSamples,
    ConstantTarget,
    EmptyFeasibleSet,
    GridMismatch,
    NoTrainingRows,
    ModelMissing,
    MissingT1Indicator,
    NoGroundTruth,
    // pipeline data requirements
    FrequencyMissing,
    FrequencyGridMismatch,
    InsufficientRange,
    ZeroT2Time,
    // I/O and configuration
    ParseError,
    SchemaError,
    ValidationError,
    ConfigError,
    IoError,
};

const char* errc_name(Errc code);

/// Process exit class for the CLI: 2 usage, 3 data, 4 model.
int errc_exit_class(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message),
          code_(code),
          message_(message) {}

    Errc code() const noexcept { return code_; }
    const std::string& message() const noexcept { return message_; }

private:
    Errc code_;
    std::string message_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace lifetest
