// Copyright 2026 The trajfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace trajfuse {

/// Base of every error thrown by the library. Callers that only need to
/// report a failure can catch this; the CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define TRAJFUSE_DEFINE_ERROR(Name)          \
  class Name : public Error {                \
   public:                                   \
    explicit Name(const std::string& what)   \
        : Error(std::string(#Name ": ") + what) {} \
  };

// adapter-core
TRAJFUSE_DEFINE_ERROR(DimensionError)
TRAJFUSE_DEFINE_ERROR(InvalidWeights)
TRAJFUSE_DEFINE_ERROR(FormatError)
TRAJFUSE_DEFINE_ERROR(VersionError)
// likert-scoring
TRAJFUSE_DEFINE_ERROR(InvalidScore)
TRAJFUSE_DEFINE_ERROR(NeutralOnly)
TRAJFUSE_DEFINE_ERROR(EmptyInput)
// basis-selection
TRAJFUSE_DEFINE_ERROR(InsufficientTrajectory)
TRAJFUSE_DEFINE_ERROR(InsufficientStable)
// dirichlet-policy
TRAJFUSE_DEFINE_ERROR(InvalidTarget)
TRAJFUSE_DEFINE_ERROR(NumericalError)
TRAJFUSE_DEFINE_ERROR(BoundaryError)
TRAJFUSE_DEFINE_ERROR(DomainError)
// rl-trainer / environments / eval
TRAJFUSE_DEFINE_ERROR(DegenerateRange)
TRAJFUSE_DEFINE_ERROR(OracleUnsupported)
TRAJFUSE_DEFINE_ERROR(DegenerateVector)
TRAJFUSE_DEFINE_ERROR(UndefinedCorrelation)
// cli
TRAJFUSE_DEFINE_ERROR(ConfigError)
TRAJFUSE_DEFINE_ERROR(MissingInput)

#undef TRAJFUSE_DEFINE_ERROR

}  // namespace trajfuse
