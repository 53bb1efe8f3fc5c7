#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "trendlens/dates.hpp"

namespace trendlens {

struct Period {
  Date start;  // inclusive
  Date end;    // inclusive

  bool contains(const Date& d) const { return start <= d && d <= end; }
  bool operator==(const Period&) const = default;
};

enum class Frequency { Monthly, Quarterly, Yearly };

std::string to_string(Frequency f);
Frequency frequency_from_string(const std::string& s);

// Machine-readable timeframe: either two explicit comparison periods or a
// reporting cadence resolved against the run date (minus a reporting buffer).
struct PeriodSpec {
  std::optional<std::pair<Period, Period>> explicit_periods;
  std::optional<Frequency> frequency;
  int buffer_months = 3;

  bool operator==(const PeriodSpec&) const = default;
};

struct MonitoringQuestion {
  std::string id;
  std::string subject;      // S
  std::string opportunity;  // O
  std::string risk_event;   // R
  PeriodSpec timeframe;     // T (machine-readable)
  std::string timeframe_text;  // T as rendered in the question sentence
  std::string harm_unit;    // e.g. "incidents", "deaths", "affected persons"
  std::string notes;

  bool operator==(const MonitoringQuestion&) const = default;

  // "Among [S] that [O], how many [R] per [T]?"
  std::string render() const;
};

// Parses and validates the canonical JSON config document. Throws
// MalformedConfig (syntax), MissingField (names the SORT component),
// InvalidPeriodSpec.
MonitoringQuestion parse_mq(const std::string& config_text);
MonitoringQuestion mq_from_json(const nlohmann::json& doc);

nlohmann::json mq_to_json(const MonitoringQuestion& mq);
std::string serialize_mq(const MonitoringQuestion& mq);

// Resolves the two comparison periods. Explicit periods pass through; a
// frequency yields the two most recent complete calendar periods whose end
// falls on or before run_date shifted back by buffer_months.
std::pair<Period, Period> derive_periods(const PeriodSpec& spec, const Date& run_date);

// Interactive SORT questionnaire over the given streams. Empty answers
// re-prompt; end-of-input or a lone "q" aborts without writing anything.
// Returns the validated question; the caller decides where to persist it.
MonitoringQuestion wizard(std::istream& in, std::ostream& out);

nlohmann::json period_to_json(const Period& p);
Period period_from_json(const nlohmann::json& j);

}  // namespace trendlens
