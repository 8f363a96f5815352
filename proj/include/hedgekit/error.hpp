#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hedgekit {

enum class ErrorCode {
    // data
    MalformedCsv,
    NonPositivePrice,
    DuplicateDate,
    FewerThanTwoRows,
    UnknownTarget,
    DegeneratePanel,
    SeriesTooShort,
    LengthMismatch,
    TooFewResiduals,
    // parameters
    InvalidArgument,
    InvalidAlpha,
    ZeroLength,
    NonPositiveCost,
    NonPositiveSigma,
    ZeroInstruments,
    // solvers
    SingularDesign,
    NotConverged,
    EigenFailure,
    DegenerateCovariance,
    NoConvergence,
    SingularScores,
    IllConditionedGamma,
    NonFiniteLoss,
};

enum class ErrorCategory { Data, Config, Solver };

std::string_view to_string(ErrorCode code);
ErrorCategory category_of(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it onto an exit status.
class HedgeError : public std::runtime_error {
public:
    HedgeError(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    ErrorCategory category() const noexcept { return category_of(code_); }

private:
    ErrorCode code_;
};

}  // namespace hedgekit
