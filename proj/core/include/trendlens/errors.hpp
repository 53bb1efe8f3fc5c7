#pragma once

#include <stdexcept>
#include <string>

namespace trendlens {

// Base class for every error raised by the toolkit. Subclasses exist so
// callers (and tests) can catch a specific failure by type.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define TRENDLENS_ERROR(Name)                                   \
  class Name : public Error {                                   \
   public:                                                      \
    explicit Name(const std::string& what) : Error(what) {}     \
  }

// Monitoring-question config.
TRENDLENS_ERROR(MalformedConfig);
TRENDLENS_ERROR(MissingField);
TRENDLENS_ERROR(InvalidPeriodSpec);
TRENDLENS_ERROR(InsufficientHistory);
TRENDLENS_ERROR(Aborted);

// Ingestion.
TRENDLENS_ERROR(FileNotFound);
TRENDLENS_ERROR(SchemaMismatch);
TRENDLENS_ERROR(EmptySnapshot);

// Assessor.
TRENDLENS_ERROR(NotJson);
TRENDLENS_ERROR(ConfigError);

// Exposure.
TRENDLENS_ERROR(NoSources);
TRENDLENS_ERROR(BoundsCrossed);
TRENDLENS_ERROR(NonPositive);
TRENDLENS_ERROR(InvalidBounds);
TRENDLENS_ERROR(NotDivergent);

// Agreement.
TRENDLENS_ERROR(LengthMismatch);
TRENDLENS_ERROR(UnknownLabel);
TRENDLENS_ERROR(EmptyStratum);
TRENDLENS_ERROR(EmptyInput);
TRENDLENS_ERROR(NoComparablePairs);

// Simulator.
TRENDLENS_ERROR(InvalidConfig);
TRENDLENS_ERROR(WrongPeriodCount);

// Registry.
TRENDLENS_ERROR(UnknownMq);
TRENDLENS_ERROR(SingleEntry);
TRENDLENS_ERROR(DuplicateEntry);

#undef TRENDLENS_ERROR

}  // namespace trendlens
