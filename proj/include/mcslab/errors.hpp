#pragma once

#include <stdexcept>
#include <string>

namespace mcs {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define MCS_DEFINE_ERROR(Name)                                   \
  struct Name : Error {                                          \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

// radial shooting
MCS_DEFINE_ERROR(IntegrationDiverged);
MCS_DEFINE_ERROR(TruncationTooSmall);
MCS_DEFINE_ERROR(MethodMismatch);
MCS_DEFINE_ERROR(BracketFailure);
MCS_DEFINE_ERROR(IllConditionedFit);

// torus Green machinery
MCS_DEFINE_ERROR(PoleCollision);

// elliptic solvers
MCS_DEFINE_ERROR(NonZeroMean);
MCS_DEFINE_ERROR(NewtonStalled);
MCS_DEFINE_ERROR(MaxIters);
MCS_DEFINE_ERROR(InvariantViolation);
MCS_DEFINE_ERROR(PathStuck);

// blow-up construction
MCS_DEFINE_ERROR(ProfileMismatch);
MCS_DEFINE_ERROR(MatchFailure);
MCS_DEFINE_ERROR(SingularGram);
MCS_DEFINE_ERROR(LinearSolveFailure);

// cli / config
MCS_DEFINE_ERROR(ConfigInvalid);

#undef MCS_DEFINE_ERROR

}  // namespace mcs
