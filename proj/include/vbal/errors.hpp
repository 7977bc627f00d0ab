#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vbal {

/// Mismatched lengths between an instance and a signing or vector.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input too large for an exponential or capped computation.
class SizeError : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Malformed or non-finite input data.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An internal invariant did not hold; indicates a bug, not bad input.
class InvariantViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class ReduceError : public std::runtime_error {
public:
    ReduceError(const std::string& what, std::size_t residual_rank)
        : std::runtime_error(what), residual_rank_(residual_rank) {}

    std::size_t residual_rank() const noexcept { return residual_rank_; }

private:
    std::size_t residual_rank_;
};

/// Clean-up exhausted its draw budget before the carried vector met the threshold.
class PhaseFailure : public std::runtime_error {
public:
    PhaseFailure(const std::string& what, int phase, double best_norm)
        : std::runtime_error(what), phase_(phase), best_norm_(best_norm) {}

    int phase() const noexcept { return phase_; }
    double best_norm() const noexcept { return best_norm_; }

private:
    int phase_;
    double best_norm_;
};

}  // namespace vbal
