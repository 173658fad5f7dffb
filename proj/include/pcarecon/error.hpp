#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pcarecon {

enum class ErrorKind {
    InvalidInput,
    DimensionMismatch,
    InvalidModel,
    SingularInnerMatrix,
    CholeskyFailure,
    OrderOutOfRange,
    NotIdentifiable,
    OptimizerDiverged,
    KnownRankDeficient,
    OrderConflict,
    SingularDependentBlock,
};

std::string_view to_string(ErrorKind kind);

/// Exception carrying a machine-readable kind. The CLI maps kinds to exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    /// True for failures caused by bad user input rather than numerics.
    bool is_validation() const noexcept {
        return kind_ == ErrorKind::InvalidInput || kind_ == ErrorKind::DimensionMismatch ||
               kind_ == ErrorKind::InvalidModel || kind_ == ErrorKind::OrderOutOfRange ||
               kind_ == ErrorKind::NotIdentifiable || kind_ == ErrorKind::KnownRankDeficient ||
               kind_ == ErrorKind::OrderConflict;
    }

private:
    ErrorKind kind_;
};

}  // namespace pcarecon
