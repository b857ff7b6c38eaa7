#include "bdb/error.hpp"

namespace bdb {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::kInvalidArgument: return "invalid-argument";
        case ErrorCode::kShapeMismatch: return "shape-mismatch";
        case ErrorCode::kGridMismatch: return "grid-mismatch";
        case ErrorCode::kDegenerateWeight: return "degenerate-weight";
        case ErrorCode::kNonRealizableMoments: return "non-realizable-moments";
        case ErrorCode::kSingularJacobian: return "singular-jacobian";
        case ErrorCode::kOrderExceedsTruncation: return "order-exceeds-truncation";
        case ErrorCode::kOnSpectrum: return "on-spectrum";
        case ErrorCode::kBlowUp: return "blow-up";
        case ErrorCode::kNanDetected: return "nan-detected";
        case ErrorCode::kHypothesisViolated: return "hypothesis-violated";
        case ErrorCode::kContractionFailure: return "contraction-failure";
        case ErrorCode::kConfig: return "config-error";
        case ErrorCode::kIo: return "io-error";
    }
    return "unknown";
}

}  // namespace bdb
