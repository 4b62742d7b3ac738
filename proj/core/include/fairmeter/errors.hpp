#pragma once

#include <stdexcept>
#include <string>

namespace fairmeter {

/// Input rejected before any computation starts (bad topology, bad
/// parameters, malformed scenario). CLI maps these to exit code 1.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RankDeficient final : ValidationError {
    using ValidationError::ValidationError;
};
struct EmptyRoute final : ValidationError {
    using ValidationError::ValidationError;
};
struct NonpositiveCapacity final : ValidationError {
    using ValidationError::ValidationError;
};
struct CapacityNotDecreasing final : ValidationError {
    using ValidationError::ValidationError;
};
struct CycleDetected final : ValidationError {
    using ValidationError::ValidationError;
};
struct CapacityOrdering final : ValidationError {
    using ValidationError::ValidationError;
};
struct NotLinearNetwork final : ValidationError {
    using ValidationError::ValidationError;
};

/// Failure while computing on valid inputs. CLI maps these to exit code 2.
struct ComputeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverDiverged final : ComputeError {
    using ComputeError::ComputeError;
};
struct UnstableLoad final : ComputeError {
    using ComputeError::ComputeError;
};
struct OutsideCone final : ComputeError {
    using ComputeError::ComputeError;
};
struct SingularGamma final : ComputeError {
    using ComputeError::ComputeError;
};

}  // namespace fairmeter
