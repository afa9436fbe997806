#pragma once

#include <stdexcept>
#include <string>

namespace longlens {

/// Base of every error the library raises. Each subclass names one failure
/// condition so callers can record per-eye exclusions without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define LONGLENS_DEFINE_ERROR(Name)            \
  class Name : public Error {                  \
   public:                                     \
    using Error::Error;                        \
  }

LONGLENS_DEFINE_ERROR(IoError);
LONGLENS_DEFINE_ERROR(FormatError);
LONGLENS_DEFINE_ERROR(DimensionError);
LONGLENS_DEFINE_ERROR(ScaleError);
LONGLENS_DEFINE_ERROR(EmptyMaskError);
LONGLENS_DEFINE_ERROR(SingularTransformError);
LONGLENS_DEFINE_ERROR(RegionTooSmallError);
LONGLENS_DEFINE_ERROR(ConfigError);
LONGLENS_DEFINE_ERROR(NoFundusPixelsError);
LONGLENS_DEFINE_ERROR(DegenerateCorrelationError);
LONGLENS_DEFINE_ERROR(KTooSmallError);
LONGLENS_DEFINE_ERROR(EmptySequenceError);
LONGLENS_DEFINE_ERROR(InsufficientHistoryError);
LONGLENS_DEFINE_ERROR(DegenerateTimesError);
LONGLENS_DEFINE_ERROR(NegativeDeltaError);
LONGLENS_DEFINE_ERROR(InsufficientMatchesError);
LONGLENS_DEFINE_ERROR(DegenerateConfigurationError);
LONGLENS_DEFINE_ERROR(NoViableModelError);
LONGLENS_DEFINE_ERROR(EmptyListError);
LONGLENS_DEFINE_ERROR(UnknownLateralityError);
LONGLENS_DEFINE_ERROR(AllZeroDifferencesError);
LONGLENS_DEFINE_ERROR(MissingPredictionError);
LONGLENS_DEFINE_ERROR(NoOverlapError);

#undef LONGLENS_DEFINE_ERROR

}  // namespace longlens
