#include "trendlens/exposure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "trendlens/errors.hpp"

namespace trendlens {

namespace {

using nlohmann::json;

double adjusted_value(const ProxySource& s) {
  if (s.value <= 0) throw NonPositive("proxy source '" + s.name + "' must have a positive value");
  if (s.share_adjustment) {
    if (*s.share_adjustment <= 0 || *s.share_adjustment > 1) {
      throw InvalidBounds("share_adjustment for '" + s.name + "' must be in (0, 1]");
    }
    return s.value / *s.share_adjustment;
  }
  return s.value;
}

std::string describe_assumption(const ProxySource& s) {
  std::ostringstream os;
  os << s.name << ": value " << s.value;
  if (s.share_adjustment) os << " divided by share " << *s.share_adjustment;
  os << " as " << to_string(s.role);
  if (!s.citation.empty()) os << " (" << s.citation << ")";
  return os.str();
}

int direction_of(double before, double after) {
  if (after > before) return 1;
  if (after < before) return -1;
  return 0;
}

}  // namespace

std::string to_string(ProxyRole r) {
  switch (r) {
    case ProxyRole::Lower: return "LOWER";
    case ProxyRole::Upper: return "UPPER";
    case ProxyRole::PointComponent: return "POINT_COMPONENT";
  }
  return "POINT_COMPONENT";
}

ProxyRole proxy_role_from_string(const std::string& s) {
  if (s == "LOWER") return ProxyRole::Lower;
  if (s == "UPPER") return ProxyRole::Upper;
  if (s == "POINT_COMPONENT") return ProxyRole::PointComponent;
  throw Error("unknown proxy role: " + s + " (expected LOWER|UPPER|POINT_COMPONENT)");
}

std::string to_string(ElicitedDirection d) {
  switch (d) {
    case ElicitedDirection::Increasing: return "INCREASING";
    case ElicitedDirection::Decreasing: return "DECREASING";
    case ElicitedDirection::NoConvergence: return "NO_CONVERGENCE";
  }
  return "NO_CONVERGENCE";
}

ElicitedDirection elicited_direction_from_string(const std::string& s) {
  if (s == "INCREASING") return ElicitedDirection::Increasing;
  if (s == "DECREASING") return ElicitedDirection::Decreasing;
  if (s == "NO_CONVERGENCE") return ElicitedDirection::NoConvergence;
  throw Error("unknown elicited direction: " + s);
}

int oom(double point) {
  if (!(point > 0)) throw NonPositive("order-of-magnitude input must be positive");
  return static_cast<int>(std::floor(std::log10(point) + 0.5));
}

Tier4Check tier4_check(double low, double high) {
  if (!(low > 0) || low > high) {
    throw InvalidBounds("tier4_check requires 0 < low <= high");
  }
  return high / low > 100.0 ? Tier4Check::Abstain : Tier4Check::Ok;
}

ExposureEstimate combine_proxies(const std::vector<ProxySource>& sources, const Period& period) {
  std::vector<const ProxySource*> components, lowers, uppers;
  for (const auto& s : sources) {
    if (!(s.period == period)) continue;
    switch (s.role) {
      case ProxyRole::PointComponent: components.push_back(&s); break;
      case ProxyRole::Lower: lowers.push_back(&s); break;
      case ProxyRole::Upper: uppers.push_back(&s); break;
    }
  }
  if (components.empty()) {
    throw NoSources("no POINT_COMPONENT proxy source declared for period " + period.start.iso() +
                    ".." + period.end.iso());
  }

  ExposureEstimate e;
  e.period = period;

  double comp_min = 0, comp_max = 0;
  bool first = true;
  bool authoritative = false;
  for (const auto* s : components) {
    double v = adjusted_value(*s);
    comp_min = first ? v : std::min(comp_min, v);
    comp_max = first ? v : std::max(comp_max, v);
    first = false;
    authoritative = authoritative || s->authoritative;
    e.assumptions.push_back(describe_assumption(*s));
  }
  e.point = (comp_min + comp_max) / 2.0;

  e.low = comp_min;
  if (!lowers.empty()) {
    e.low = adjusted_value(*lowers.front());
    for (const auto* s : lowers) {
      e.low = std::min(e.low, adjusted_value(*s));
      authoritative = authoritative || s->authoritative;
      e.assumptions.push_back(describe_assumption(*s));
    }
  }
  e.high = comp_max;
  if (!uppers.empty()) {
    e.high = adjusted_value(*uppers.front());
    for (const auto* s : uppers) {
      e.high = std::max(e.high, adjusted_value(*s));
      authoritative = authoritative || s->authoritative;
      e.assumptions.push_back(describe_assumption(*s));
    }
  }

  if (e.low > e.high || e.point < e.low || e.point > e.high) {
    std::ostringstream os;
    os << "inconsistent proxy declarations for period " << period.start.iso() << ".."
       << period.end.iso() << ": low " << e.low << ", point " << e.point << ", high " << e.high;
    throw BoundsCrossed(os.str());
  }

  e.oom = oom(e.point);
  e.tier = authoritative ? 1 : 2;
  e.confidence = e.tier == 1 ? Confidence::High : Confidence::Medium;
  return e;
}

ExposureTrendOutcome exposure_trend(const ExposureEstimate& e1, const ExposureEstimate& e2) {
  ExposureTrendOutcome out;
  if (tier4_check(e1.low, e1.high) == Tier4Check::Abstain ||
      tier4_check(e2.low, e2.high) == Tier4Check::Abstain) {
    out.status = TrendStatus::Abstain;
    return out;
  }

  out.growth_rate = (e2.point - e1.point) / e1.point;
  int low_dir = direction_of(e1.low, e2.low);
  int high_dir = direction_of(e1.high, e2.high);
  if (low_dir != high_dir) {
    out.status = TrendStatus::Divergent;
  } else {
    out.status = low_dir > 0   ? TrendStatus::Increasing
                 : low_dir < 0 ? TrendStatus::Decreasing
                               : TrendStatus::Flat;
  }
  return out;
}

ExposureTrendOutcome resolve_divergence(const ExposureTrendOutcome& outcome,
                                        const ElicitationRecord& record) {
  if (outcome.status != TrendStatus::Divergent) {
    throw NotDivergent("resolve_divergence applies only to divergent outcomes");
  }
  ExposureTrendOutcome resolved = outcome;
  switch (record.direction) {
    case ElicitedDirection::Increasing:
      resolved.status = TrendStatus::Increasing;
      resolved.resolved_by = record;
      break;
    case ElicitedDirection::Decreasing:
      resolved.status = TrendStatus::Decreasing;
      resolved.resolved_by = record;
      break;
    case ElicitedDirection::NoConvergence:
      resolved.status = TrendStatus::Abstain;
      resolved.growth_rate.reset();
      break;
  }
  return resolved;
}

json exposure_estimate_to_json(const ExposureEstimate& e) {
  return json{{"period", period_to_json(e.period)},
              {"point", e.point},
              {"low", e.low},
              {"high", e.high},
              {"oom", e.oom},
              {"tier", e.tier},
              {"confidence", to_string(e.confidence)},
              {"assumptions", e.assumptions}};
}

ExposureEstimate exposure_estimate_from_json(const json& j) {
  ExposureEstimate e;
  e.period = period_from_json(j.at("period"));
  e.point = j.at("point").get<double>();
  e.low = j.at("low").get<double>();
  e.high = j.at("high").get<double>();
  if (!(e.low > 0) || e.low > e.point || e.point > e.high) {
    throw InvalidBounds("exposure estimate must satisfy 0 < low <= point <= high");
  }
  e.oom = j.contains("oom") ? j["oom"].get<int>() : oom(e.point);
  e.tier = j.value("tier", 2);
  std::string conf = j.value("confidence", "");
  e.confidence = conf == "HIGH" ? Confidence::High
                 : conf == "LOW" ? Confidence::Low
                                 : Confidence::Medium;
  e.assumptions = j.value("assumptions", std::vector<std::string>{});
  return e;
}

json exposure_outcome_to_json(const ExposureTrendOutcome& o) {
  json j{{"status", to_string(o.status)}};
  if (o.growth_rate) j["growth_rate"] = *o.growth_rate;
  if (o.resolved_by) {
    j["resolved_by"] = json{{"expert_panel", o.resolved_by->expert_panel},
                            {"direction", to_string(o.resolved_by->direction)},
                            {"rationale", o.resolved_by->rationale},
                            {"date", o.resolved_by->date.iso()}};
  }
  return j;
}

ExposureTrendOutcome exposure_outcome_from_json(const json& j) {
  ExposureTrendOutcome o;
  o.status = trend_status_from_string(j.at("status").get<std::string>());
  if (j.contains("growth_rate") && j["growth_rate"].is_number()) {
    o.growth_rate = j["growth_rate"].get<double>();
  }
  if (j.contains("resolved_by")) o.resolved_by = elicitation_from_json(j["resolved_by"]);
  return o;
}

ProxySource proxy_source_from_json(const json& j) {
  ProxySource s;
  s.name = j.at("name").get<std::string>();
  s.period = period_from_json(j.at("period"));
  s.value = j.at("value").get<double>();
  if (!(s.value > 0)) throw NonPositive("proxy source '" + s.name + "' must have value > 0");
  s.role = proxy_role_from_string(j.at("role").get<std::string>());
  if (j.contains("share_adjustment") && !j["share_adjustment"].is_null()) {
    s.share_adjustment = j["share_adjustment"].get<double>();
    if (*s.share_adjustment <= 0 || *s.share_adjustment > 1) {
      throw InvalidBounds("share_adjustment for '" + s.name + "' must be in (0, 1]");
    }
  }
  s.citation = j.value("citation", "");
  s.authoritative = j.value("authoritative", false);
  return s;
}

ElicitationRecord elicitation_from_json(const json& j) {
  ElicitationRecord r;
  r.expert_panel = j.at("expert_panel").get<std::string>();
  r.direction = elicited_direction_from_string(j.at("direction").get<std::string>());
  r.rationale = j.at("rationale").get<std::string>();
  if (r.rationale.empty()) throw Error("elicitation record needs a non-empty rationale");
  r.date = Date::parse(j.at("date").get<std::string>());
  return r;
}

}  // namespace trendlens
