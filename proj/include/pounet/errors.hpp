#pragma once

#include <stdexcept>
#include <string>

namespace pounet {

/// Shapes or dimensions of the operands do not agree.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A NaN or Inf showed up where only finite values are allowed.
class NonFiniteError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Training aborted. Carries the epoch at which it happened.
class TrainingError : public std::runtime_error {
public:
    TrainingError(const std::string& what, std::size_t epoch)
        : std::runtime_error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}

    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

}  // namespace pounet
