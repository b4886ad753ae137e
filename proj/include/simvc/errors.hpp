#pragma once

#include <stdexcept>
#include <string>

namespace simvc {

/// Base class for every typed pipeline error.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define SIMVC_ERROR(Name)                                   \
  struct Name : Error {                                     \
    explicit Name(const std::string& w) : Error(#Name ": " + w) {} \
  }

SIMVC_ERROR(MalformedRecord);
SIMVC_ERROR(DanglingReference);
SIMVC_ERROR(TemporalViolation);
SIMVC_ERROR(UnknownStartup);
SIMVC_ERROR(UnknownPerson);
SIMVC_ERROR(NoQualifyingRound);
SIMVC_ERROR(LabelNotObservable);
SIMVC_ERROR(NoHistoricalInvestors);
SIMVC_ERROR(EmptyPool);
SIMVC_ERROR(ShapeMismatch);
SIMVC_ERROR(Divergence);
SIMVC_ERROR(BackendUnavailable);
SIMVC_ERROR(EmptyWindow);
SIMVC_ERROR(CohortSmallerThanK);
SIMVC_ERROR(AllMonthsSkipped);
SIMVC_ERROR(NoPositiveLabels);
SIMVC_ERROR(MissingCheckpoint);
SIMVC_ERROR(InvalidConfig);
SIMVC_ERROR(IoError);

#undef SIMVC_ERROR

}  // namespace simvc
