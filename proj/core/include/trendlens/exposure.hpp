#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendlens/dates.hpp"
#include "trendlens/harm.hpp"
#include "trendlens/mq.hpp"

namespace trendlens {

enum class ProxyRole { Lower, Upper, PointComponent };

std::string to_string(ProxyRole r);
ProxyRole proxy_role_from_string(const std::string& s);

struct ProxySource {
  std::string name;
  Period period;
  double value = 0;  // in the exposure unit, before share adjustment
  ProxyRole role = ProxyRole::PointComponent;
  std::optional<double> share_adjustment;  // divide value by this (e.g. market share)
  std::string citation;
  bool authoritative = false;  // mandatory reporting systems and the like
};

struct ExposureEstimate {
  Period period;
  double point = 0;
  double low = 0;
  double high = 0;
  int oom = 0;  // power of ten
  int tier = 2;
  Confidence confidence = Confidence::Medium;
  std::vector<std::string> assumptions;
};

enum class ElicitedDirection { Increasing, Decreasing, NoConvergence };

std::string to_string(ElicitedDirection d);
ElicitedDirection elicited_direction_from_string(const std::string& s);

struct ElicitationRecord {
  std::string expert_panel;
  ElicitedDirection direction = ElicitedDirection::NoConvergence;
  std::string rationale;
  Date date;
};

struct ExposureTrendOutcome {
  TrendStatus status = TrendStatus::Abstain;
  std::optional<double> growth_rate;  // (point2 - point1) / point1
  std::optional<ElicitationRecord> resolved_by;
};

// Nearest power of ten, round-half-up on log10 (88e6 -> 8, not 7).
int oom(double point);

enum class Tier4Check { Ok, Abstain };

// Abstain when the plausible range spans more than two orders of magnitude.
Tier4Check tier4_check(double low, double high);

// Builds one period's estimate from declared proxy sources: the point is the
// midpoint of share-adjusted point components; bounds come from LOWER/UPPER
// sources (falling back to the component min/max). Bound violations raise
// BoundsCrossed rather than being clamped.
ExposureEstimate combine_proxies(const std::vector<ProxySource>& sources, const Period& period);

// Direction agreement over the bound series, growth over the points. Either
// estimate failing the two-orders-of-magnitude check yields abstention.
ExposureTrendOutcome exposure_trend(const ExposureEstimate& e1, const ExposureEstimate& e2);

// Applies an expert elicitation to a divergent outcome. NO_CONVERGENCE maps
// to abstention; anything other than a divergent input is an error.
ExposureTrendOutcome resolve_divergence(const ExposureTrendOutcome& outcome,
                                        const ElicitationRecord& record);

nlohmann::json exposure_estimate_to_json(const ExposureEstimate& e);
ExposureEstimate exposure_estimate_from_json(const nlohmann::json& j);
nlohmann::json exposure_outcome_to_json(const ExposureTrendOutcome& o);
ExposureTrendOutcome exposure_outcome_from_json(const nlohmann::json& j);
ProxySource proxy_source_from_json(const nlohmann::json& j);
ElicitationRecord elicitation_from_json(const nlohmann::json& j);

}  // namespace trendlens
