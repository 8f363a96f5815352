#include "hedgekit/error.hpp"

namespace hedgekit {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedCsv: return "MalformedCsv";
        case ErrorCode::NonPositivePrice: return "NonPositivePrice";
        case ErrorCode::DuplicateDate: return "DuplicateDate";
        case ErrorCode::FewerThanTwoRows: return "FewerThanTwoRows";
        case ErrorCode::UnknownTarget: return "UnknownTarget";
        case ErrorCode::DegeneratePanel: return "DegeneratePanel";
        case ErrorCode::SeriesTooShort: return "SeriesTooShort";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::TooFewResiduals: return "TooFewResiduals";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InvalidAlpha: return "InvalidAlpha";
        case ErrorCode::ZeroLength: return "ZeroLength";
        case ErrorCode::NonPositiveCost: return "NonPositiveCost";
        case ErrorCode::NonPositiveSigma: return "NonPositiveSigma";
        case ErrorCode::ZeroInstruments: return "ZeroInstruments";
        case ErrorCode::SingularDesign: return "SingularDesign";
        case ErrorCode::NotConverged: return "NotConverged";
        case ErrorCode::EigenFailure: return "EigenFailure";
        case ErrorCode::DegenerateCovariance: return "DegenerateCovariance";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::SingularScores: return "SingularScores";
        case ErrorCode::IllConditionedGamma: return "IllConditionedGamma";
        case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    }
    return "Unknown";
}

ErrorCategory category_of(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedCsv:
        case ErrorCode::NonPositivePrice:
        case ErrorCode::DuplicateDate:
        case ErrorCode::FewerThanTwoRows:
        case ErrorCode::UnknownTarget:
        case ErrorCode::DegeneratePanel:
        case ErrorCode::SeriesTooShort:
        case ErrorCode::LengthMismatch:
        case ErrorCode::TooFewResiduals:
            return ErrorCategory::Data;
        case ErrorCode::InvalidArgument:
        case ErrorCode::InvalidAlpha:
        case ErrorCode::ZeroLength:
        case ErrorCode::NonPositiveCost:
        case ErrorCode::NonPositiveSigma:
        case ErrorCode::ZeroInstruments:
            return ErrorCategory::Config;
        default:
            return ErrorCategory::Solver;
    }
}

}  // namespace hedgekit
