#pragma once

#include <stdexcept>
#include <string>

namespace lexjudge {

enum class ErrorCode {
    Io = 1,
    Parse = 2,
    Invalid = 3,
    Backend = 4,
    State = 5,
    Internal = 6,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Raised by the trainer when the loss or a parameter turns non-finite.
class TrainingDiverged : public Error {
public:
    TrainingDiverged(int epoch, double lr, const std::string& message)
        : Error(ErrorCode::State, message), epoch_(epoch), lr_(lr) {}

    int epoch() const noexcept { return epoch_; }
    double lr() const noexcept { return lr_; }

private:
    int epoch_;
    double lr_;
};

}  // namespace lexjudge
