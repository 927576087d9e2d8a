#include "lifetest/core/error.hpp"

namespace lifetest {

const char* errc_name(Errc code) {
    switch (code) {
        case Errc::NoMatch: return "NoMatch";
        case Errc::Ambiguous: return "Ambiguous";
        case Errc::UnknownId: return "UnknownId";
        case Errc::TooFewPoints: return "TooFewPoints";
        case Errc::NonMonotoneX: return "NonMonotoneX";
        case Errc::GridOutOfDomain: return "GridOutOfDomain";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::MapeUndefined: return "MapeUndefined";
        case Errc::R2Undefined: return "R2Undefined";
        case Errc::ConstantInput: return "ConstantInput";
        case Errc::EmptyInput: return "EmptyInput";
        case Errc::NonFiniteInput: return "NonFiniteInput";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::TooFewSamples: return "TooFewSamples";
        case Errc::ConstantTarget: return "ConstantTarget";
        case Errc::EmptyFeasibleSet: return "EmptyFeasibleSet";
        case Errc::GridMismatch: return "GridMismatch";
        case Errc::NoTrainingRows: return "NoTrainingRows";
        case Errc::ModelMissing: return "ModelMissing";
        case Errc::MissingT1Indicator: return "MissingT1Indicator";
        case Errc::NoGroundTruth: return "NoGroundTruth";
        case Errc::FrequencyMissing: return "FrequencyMissing";
        case Errc::FrequencyGridMismatch: return "FrequencyGridMismatch";
        case Errc::InsufficientRange: return "InsufficientRange";
        case Errc::ZeroT2Time: return "ZeroT2Time";
        case Errc::ParseError: return "ParseError";
        case Errc::SchemaError: return "SchemaError";
        case Errc::ValidationError: return "ValidationError";
        case Errc::ConfigError: return "ConfigError";
        case Errc::IoError: return "IoError";
    }
    return "UnknownError";
}

int errc_exit_class(Errc code) {
    switch (code) {
        case Errc::ConfigError:
            return 2;
        case Errc::NoMatch:
        case Errc::Ambiguous:
        case Errc::UnknownId:
        case Errc::TooFewPoints:
        case Errc::NonMonotoneX:
        case Errc::GridOutOfDomain:
        case Errc::LengthMismatch:
        case Errc::MapeUndefined:
        case Errc::R2Undefined:
        case Errc::ConstantInput:
        case Errc::FrequencyMissing:
        case Errc::FrequencyGridMismatch:
        case Errc::InsufficientRange:
        case Errc::ZeroT2Time:
        case Errc::ParseError:
        case Errc::SchemaError:
        case Errc::ValidationError:
        case Errc::IoError:
            return 3;
        default:
            return 4;  // model errors
    }
}

}  // namespace lifetest
