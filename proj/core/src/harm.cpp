#include "trendlens/harm.hpp"

#include <cassert>
#include <limits>

#include "trendlens/errors.hpp"

namespace trendlens {

namespace {

using nlohmann::json;

int direction_of(long long before, long long after) {
  if (after > before) return 1;
  if (after < before) return -1;
  return 0;
}

double lower_growth(const HarmBounds& b1, const HarmBounds& b2) {
  if (b1.lower == 0) {
    return b2.lower == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return static_cast<double>(b2.lower - b1.lower) / static_cast<double>(b1.lower);
}

}  // namespace

std::string to_string(TrendStatus s) {
  switch (s) {
    case TrendStatus::Increasing: return "INCREASING";
    case TrendStatus::Decreasing: return "DECREASING";
    case TrendStatus::Flat: return "FLAT";
    case TrendStatus::Divergent: return "DIVERGENT";
    case TrendStatus::Abstain: return "ABSTAIN";
  }
  return "ABSTAIN";
}

TrendStatus trend_status_from_string(const std::string& s) {
  if (s == "INCREASING") return TrendStatus::Increasing;
  if (s == "DECREASING") return TrendStatus::Decreasing;
  if (s == "FLAT") return TrendStatus::Flat;
  if (s == "DIVERGENT") return TrendStatus::Divergent;
  if (s == "ABSTAIN") return TrendStatus::Abstain;
  throw Error("unknown trend status: " + s);
}

std::string to_string(Confidence c) {
  switch (c) {
    case Confidence::High: return "HIGH";
    case Confidence::Medium: return "MEDIUM";
    case Confidence::Low: return "LOW";
  }
  return "LOW";
}

MatchPartition partition(const std::vector<Assessment>& assessments) {
  MatchPartition out;
  for (const auto& a : assessments) {
    if (a.s_match.value == Match::True && a.r_match.value == Match::True) {
      out.full.push_back(a);
    } else if (a.s_match.value == Match::False || a.r_match.value == Match::False) {
      out.negative.push_back(a);
    } else {
      out.partial.push_back(a);
    }
  }
  return out;
}

Confidence label_confidence(int tier, int full_count, int min_full) {
  int level = tier <= 1 ? 0 : tier == 2 ? 1 : 2;  // 0=HIGH 1=MEDIUM 2=LOW
  if (full_count < min_full) {
    level = 2;
  } else if (full_count < 2 * min_full) {
    level += 1;  // close to the abstention threshold
  }
  level = std::min(level, 2);
  return level == 0 ? Confidence::High : level == 1 ? Confidence::Medium : Confidence::Low;
}

HarmBounds harm_bounds(const MatchPartition& match_partition, const Period& period,
                       const std::string& harm_unit, int tier, int min_full) {
  HarmBounds b;
  b.period = period;
  b.tier = tier;
  b.full_count = static_cast<int>(match_partition.full.size());
  b.partial_count = static_cast<int>(match_partition.partial.size());

  const bool unit_is_incidents = harm_unit == "incidents";
  for (const auto& a : match_partition.full) {
    if (!a.harm_lower && !a.harm_upper && unit_is_incidents) {
      // An incident is itself one incident.
      b.lower += 1;
      b.upper += 1;
      continue;
    }
    long long lo = a.harm_lower.value_or(0);
    // A missing upper still cannot fall below the known lower.
    long long hi = a.harm_upper.value_or(lo);
    b.lower += lo;
    b.upper += hi;
  }
  for (const auto& a : match_partition.partial) {
    b.upper += a.harm_upper.value_or(0);
  }

  b.confidence = label_confidence(tier, b.full_count, min_full);
  return b;
}

HarmTrendOutcome harm_trend(const HarmBounds& b1, const HarmBounds& b2, int min_full,
                            double overspec_ratio) {
  assert(b1.period.start <= b2.period.start);
  HarmTrendOutcome out;

  auto overspecified = [&](const HarmBounds& b) {
    return static_cast<double>(b.partial_count) >
           overspec_ratio * static_cast<double>(b.full_count);
  };
  if (overspecified(b1) || overspecified(b2)) out.flags.insert(kFlagOverspecified);

  if (b1.full_count < min_full || b2.full_count < min_full) {
    out.status = TrendStatus::Abstain;
    return out;
  }

  int lower_dir = direction_of(b1.lower, b2.lower);
  int upper_dir = direction_of(b1.upper, b2.upper);
  if (lower_dir != upper_dir) {
    out.status = TrendStatus::Divergent;
    return out;
  }
  out.status = lower_dir > 0   ? TrendStatus::Increasing
               : lower_dir < 0 ? TrendStatus::Decreasing
                               : TrendStatus::Flat;
  out.growth_rate = lower_growth(b1, b2);
  return out;
}

HarmTrendOutcome merge_sources(
    const std::vector<std::pair<std::string, HarmTrendOutcome>>& outcomes) {
  assert(!outcomes.empty());
  for (const auto& [source, outcome] : outcomes) {
    if (outcome.status != TrendStatus::Abstain) {
      HarmTrendOutcome merged = outcome;
      merged.source = source;
      return merged;
    }
  }
  HarmTrendOutcome merged = outcomes.front().second;
  merged.status = TrendStatus::Abstain;
  merged.growth_rate.reset();
  merged.source = "";
  return merged;
}

json harm_bounds_to_json(const HarmBounds& b) {
  return json{{"period", period_to_json(b.period)},
              {"lower", b.lower},
              {"upper", b.upper},
              {"full_count", b.full_count},
              {"partial_count", b.partial_count},
              {"tier", b.tier},
              {"confidence", to_string(b.confidence)}};
}

json harm_outcome_to_json(const HarmTrendOutcome& o) {
  json j{{"status", to_string(o.status)}, {"flags", json::array()}};
  for (const auto& f : o.flags) j["flags"].push_back(f);
  if (o.growth_rate) j["growth_rate"] = *o.growth_rate;
  if (!o.source.empty()) j["source"] = o.source;
  return j;
}

HarmTrendOutcome harm_outcome_from_json(const json& j) {
  HarmTrendOutcome o;
  o.status = trend_status_from_string(j.at("status").get<std::string>());
  if (j.contains("growth_rate") && j["growth_rate"].is_number()) {
    o.growth_rate = j["growth_rate"].get<double>();
  }
  if (j.contains("flags")) {
    for (const auto& f : j["flags"]) o.flags.insert(f.get<std::string>());
  }
  o.source = j.value("source", "");
  return o;
}

}  // namespace trendlens
