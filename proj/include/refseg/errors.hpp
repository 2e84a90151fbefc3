// Error codes shared by every module. All failures surface as refseg::Error
// so callers can branch on the code without parsing messages.

#pragma once

#include <stdexcept>
#include <string>

namespace refseg {

enum class Errc {
    counts_mismatch,
    empty_mask,
    dimension_mismatch,
    schema_error,
    missing_image,
    not_found,
    empty_proposal_set,
    empty_expression,
    empty_text,
    backend_unavailable,
    bad_response,
    timeout,
    bad_resolution,
    degenerate_sum,
    empty_input,
    empty_accumulator,
    config_mismatch,
    io_error,
};

inline const char* to_string(Errc c) {
    switch (c) {
        case Errc::counts_mismatch:     return "CountsMismatch";
        case Errc::empty_mask:          return "EmptyMask";
        case Errc::dimension_mismatch:  return "DimensionMismatch";
        case Errc::schema_error:        return "SchemaError";
        case Errc::missing_image:       return "MissingImage";
        case Errc::not_found:           return "NotFound";
        case Errc::empty_proposal_set:  return "EmptyProposalSet";
        case Errc::empty_expression:    return "EmptyExpression";
        case Errc::empty_text:          return "EmptyText";
        case Errc::backend_unavailable: return "BackendUnavailable";
        case Errc::bad_response:        return "BadResponse";
        case Errc::timeout:             return "Timeout";
        case Errc::bad_resolution:      return "BadResolution";
        case Errc::degenerate_sum:      return "DegenerateSum";
        case Errc::empty_input:         return "EmptyInput";
        case Errc::empty_accumulator:   return "EmptyAccumulator";
        case Errc::config_mismatch:     return "ConfigMismatch";
        case Errc::io_error:            return "IoError";
    }
    return "UnknownError";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) {
    throw Error(code, what);
}

} // namespace refseg
