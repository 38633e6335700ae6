#pragma once

#include <stdexcept>
#include <string>

namespace optospring {

/// Thrown when an input violates a documented invariant. The message names
/// the offending field (e.g. `cavity.length_m`).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class NumericalFailure {
    NoCrossing,       // no root of the resonance condition in the bracket
    Divergence,       // time-domain state left the physical envelope
    NoPeak,           // sweep has no interior magnitude maximum
    PoorFit,          // envelope fit quality below threshold
    NonConvergence,   // steady state not reached / linearity check failed
    InsufficientData, // too few samples or cycles for the estimator
};

inline const char* to_string(NumericalFailure kind) {
    switch (kind) {
    case NumericalFailure::NoCrossing: return "no-crossing";
    case NumericalFailure::Divergence: return "divergence";
    case NumericalFailure::NoPeak: return "no-peak";
    case NumericalFailure::PoorFit: return "poor-fit";
    case NumericalFailure::NonConvergence: return "non-convergence";
    case NumericalFailure::InsufficientData: return "insufficient-data";
    }
    return "unknown";
}

class NumericalError : public std::runtime_error {
public:
    NumericalError(NumericalFailure kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    NumericalFailure kind() const noexcept { return kind_; }

private:
    NumericalFailure kind_;
};

} // namespace optospring
