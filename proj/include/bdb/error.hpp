#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bdb {

/// Failure categories surfaced by the library. The CLI maps these onto exit codes.
enum class ErrorCode {
    kInvalidArgument,
    kShapeMismatch,
    kGridMismatch,
    kDegenerateWeight,
    kNonRealizableMoments,
    kSingularJacobian,
    kOrderExceedsTruncation,
    kOnSpectrum,
    kBlowUp,
    kNanDetected,
    kHypothesisViolated,
    kContractionFailure,
    kConfig,
    kIo,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace bdb
