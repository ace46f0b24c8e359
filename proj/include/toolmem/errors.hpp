#pragma once

#include <stdexcept>
#include <string>

namespace toolmem {

enum class ErrorKind {
    InvalidArgument,
    NotFound,
    Parse,
    Schema,
    Template,
    Transport,
    Model,
    Embedding,
    UnparseableScore,
    Prediction,
    RefinementRejected,
    DegenerateInput,
    Io,
};

/// Library-wide exception carrying a machine-checkable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid-argument";
        case ErrorKind::NotFound: return "not-found";
        case ErrorKind::Parse: return "parse-error";
        case ErrorKind::Schema: return "schema-error";
        case ErrorKind::Template: return "template-error";
        case ErrorKind::Transport: return "transport-error";
        case ErrorKind::Model: return "model-error";
        case ErrorKind::Embedding: return "embedding-error";
        case ErrorKind::UnparseableScore: return "unparseable-score";
        case ErrorKind::Prediction: return "prediction-error";
        case ErrorKind::RefinementRejected: return "refinement-rejected";
        case ErrorKind::DegenerateInput: return "degenerate-input";
        case ErrorKind::Io: return "io-error";
    }
    return "unknown";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

} // namespace toolmem
