#pragma once

#include <stdexcept>
#include <string>

namespace mrnav {

// Rejection sampling could not place starts/goals within the retry budget.
struct InfeasibleInstanceError : std::runtime_error {
    explicit InfeasibleInstanceError(const std::string& what) : std::runtime_error(what) {}
};

// The expert planner exhausted its node budget without a schedule.
struct UnsolvedInstanceError : std::runtime_error {
    explicit UnsolvedInstanceError(const std::string& what) : std::runtime_error(what) {}
};

// A safety-set violation reached the analytic barrier functions
// (non-positive h, or a pair inside the singularity guard).
struct SafetyDomainError : std::domain_error {
    explicit SafetyDomainError(const std::string& what) : std::domain_error(what) {}
};

// Malformed/truncated files, bad magic, version or shape mismatches.
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mrnav
