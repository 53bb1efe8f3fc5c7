#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendlens/assessor.hpp"
#include "trendlens/mq.hpp"

namespace trendlens {

enum class TrendStatus { Increasing, Decreasing, Flat, Divergent, Abstain };
enum class Confidence { High, Medium, Low };

std::string to_string(TrendStatus s);
std::string to_string(Confidence c);
TrendStatus trend_status_from_string(const std::string& s);

// Full: both components true. Negative: any component false (a definite
// failure excludes the incident even when the other component is
// indeterminate). Partial: the rest.
struct MatchPartition {
  std::vector<Assessment> full;
  std::vector<Assessment> partial;
  std::vector<Assessment> negative;
};

MatchPartition partition(const std::vector<Assessment>& assessments);

struct HarmBounds {
  Period period;
  long long lower = 0;
  long long upper = 0;
  int full_count = 0;
  int partial_count = 0;
  int tier = 2;
  Confidence confidence = Confidence::Medium;
};

inline constexpr const char* kFlagOverspecified = "OVERSPECIFIED";

struct HarmTrendOutcome {
  TrendStatus status = TrendStatus::Abstain;
  std::optional<double> growth_rate;  // relative change of the lower-bound totals
  std::set<std::string> flags;
  std::string source;  // which source a merged outcome came from

  bool overspecified() const { return flags.contains(kFlagOverspecified); }
};

// Per-period bounds: lower sums harm_lower over full matches, upper sums
// harm_upper over full and partial matches. When harm_unit is "incidents" a
// full match without bounds counts as one incident (1, 1); for any other
// unit absent bounds contribute nothing. Confidence derives from the tier,
// demoted when the full-match count sits near the abstention threshold.
HarmBounds harm_bounds(const MatchPartition& match_partition, const Period& period,
                       const std::string& harm_unit, int tier = 2, int min_full = 3);

Confidence label_confidence(int tier, int full_count, int min_full);

// Trend across two periods: abstain when either period has fewer than
// min_full full matches; otherwise the lower- and upper-bound series must
// agree in direction, and disagreement is reported as divergent. The
// OVERSPECIFIED flag fires when partial matches outnumber full matches by
// more than overspec_ratio in either period.
HarmTrendOutcome harm_trend(const HarmBounds& b1, const HarmBounds& b2, int min_full = 3,
                            double overspec_ratio = 5.0);

// First non-abstaining outcome in the caller's priority order wins; the
// result records which source it came from.
HarmTrendOutcome merge_sources(
    const std::vector<std::pair<std::string, HarmTrendOutcome>>& outcomes);

nlohmann::json harm_bounds_to_json(const HarmBounds& b);
nlohmann::json harm_outcome_to_json(const HarmTrendOutcome& o);
HarmTrendOutcome harm_outcome_from_json(const nlohmann::json& j);

}  // namespace trendlens
