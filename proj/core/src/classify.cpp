#include "trendlens/classify.hpp"

#include "trendlens/errors.hpp"

namespace trendlens {

namespace {

using nlohmann::json;

// "FLAT contributes growth 0" so a flat series never tilts the comparison.
double growth_for_comparison(TrendStatus status, const std::optional<double>& growth) {
  if (status == TrendStatus::Flat) return 0.0;
  return growth.value_or(0.0);
}

}  // namespace

std::string to_string(Direction d) {
  switch (d) {
    case Direction::Up: return "UP";
    case Direction::Down: return "DOWN";
    case Direction::Flat: return "FLAT";
    case Direction::Undetermined: return "UNDETERMINED";
  }
  return "UNDETERMINED";
}

std::string to_string(Category c) {
  switch (c) {
    case Category::Escalating: return "ESCALATING";
    case Category::Mitigating: return "MITIGATING";
    case Category::Concentrating: return "CONCENTRATING";
    case Category::Receding: return "RECEDING";
    case Category::Unclassifiable: return "UNCLASSIFIABLE";
  }
  return "UNCLASSIFIABLE";
}

Category category_from_string(const std::string& s) {
  if (s == "ESCALATING") return Category::Escalating;
  if (s == "MITIGATING") return Category::Mitigating;
  if (s == "CONCENTRATING") return Category::Concentrating;
  if (s == "RECEDING") return Category::Receding;
  if (s == "UNCLASSIFIABLE") return Category::Unclassifiable;
  throw Error("unknown trajectory category: " + s);
}

Direction to_direction(TrendStatus status) {
  switch (status) {
    case TrendStatus::Increasing: return Direction::Up;
    case TrendStatus::Decreasing: return Direction::Down;
    case TrendStatus::Flat: return Direction::Flat;
    case TrendStatus::Divergent:
    case TrendStatus::Abstain: return Direction::Undetermined;
  }
  return Direction::Undetermined;
}

Direction derive_hhat(const HarmTrendOutcome& harm, const ExposureTrendOutcome& exposure,
                      double dead_band) {
  if (harm.status == TrendStatus::Abstain || harm.status == TrendStatus::Divergent ||
      exposure.status == TrendStatus::Abstain || exposure.status == TrendStatus::Divergent) {
    return Direction::Undetermined;
  }
  double d = growth_for_comparison(harm.status, harm.growth_rate) -
             growth_for_comparison(exposure.status, exposure.growth_rate);
  if (d > dead_band) return Direction::Up;
  if (d < -dead_band) return Direction::Down;
  return Direction::Flat;
}

Category classify_directions(Direction e_direction, Direction hhat_direction) {
  if (e_direction == Direction::Undetermined || hhat_direction == Direction::Undetermined) {
    return Category::Unclassifiable;
  }
  switch (e_direction) {
    case Direction::Up:
      return hhat_direction == Direction::Down ? Category::Mitigating : Category::Escalating;
    case Direction::Down:
      return hhat_direction == Direction::Up ? Category::Concentrating : Category::Receding;
    case Direction::Flat:
      if (hhat_direction == Direction::Up) return Category::Concentrating;
      if (hhat_direction == Direction::Down) return Category::Mitigating;
      return Category::Receding;  // neither dimension is worsening
    default: return Category::Unclassifiable;
  }
}

TrajectoryResult annotate(const HarmTrendOutcome& harm, const ExposureTrendOutcome& exposure,
                          double dead_band, const json& extra_evidence) {
  TrajectoryResult result;
  result.e_direction = to_direction(exposure.status);
  result.hhat_direction = derive_hhat(harm, exposure, dead_band);
  result.category = classify_directions(result.e_direction, result.hhat_direction);
  result.absolute_harm_warning =
      result.category == Category::Mitigating && harm.status == TrendStatus::Increasing;

  result.evidence = json{{"harm", harm_outcome_to_json(harm)},
                         {"exposure", exposure_outcome_to_json(exposure)},
                         {"dead_band", dead_band}};
  if (harm.growth_rate) result.evidence["harm_growth_rate"] = *harm.growth_rate;
  if (exposure.growth_rate) result.evidence["exposure_growth_rate"] = *exposure.growth_rate;
  for (const auto& [key, value] : extra_evidence.items()) result.evidence[key] = value;
  return result;
}

TransitionLabel transition(const TrajectoryResult& prev, const TrajectoryResult& curr) {
  TransitionLabel label;
  label.from = prev.category;
  label.to = curr.category;

  if (prev.category == Category::Unclassifiable || curr.category == Category::Unclassifiable) {
    label.interpretation_key = "unknown";
    label.text = "At least one classification was unclassifiable; no transition reading.";
    return label;
  }
  if (prev.category == Category::Escalating && curr.category == Category::Mitigating) {
    label.interpretation_key = "possible successful intervention";
    label.text = "Escalating to mitigating: harm per exposure stopped outpacing deployment, "
                 "consistent with an intervention taking effect.";
    return label;
  }
  if (prev.category == Category::Receding && curr.category == Category::Concentrating) {
    label.interpretation_key = "deepening harm within a subpopulation";
    label.text = "Receding to concentrating: fewer are exposed but those who are face worse "
                 "outcomes.";
    return label;
  }
  if (prev.category == curr.category) {
    label.interpretation_key = "stable";
    label.text = "Category unchanged between the two classifications.";
    return label;
  }
  label.interpretation_key = "neutral";
  label.text = "Category moved from " + to_string(prev.category) + " to " +
               to_string(curr.category) + ".";
  return label;
}

json trajectory_to_json(const TrajectoryResult& t) {
  return json{{"category", to_string(t.category)},
              {"e_direction", to_string(t.e_direction)},
              {"hhat_direction", to_string(t.hhat_direction)},
              {"absolute_harm_warning", t.absolute_harm_warning},
              {"evidence", t.evidence}};
}

TrajectoryResult trajectory_from_json(const json& j) {
  TrajectoryResult t;
  t.category = category_from_string(j.at("category").get<std::string>());
  auto dir = [](const std::string& s) {
    if (s == "UP") return Direction::Up;
    if (s == "DOWN") return Direction::Down;
    if (s == "FLAT") return Direction::Flat;
    return Direction::Undetermined;
  };
  t.e_direction = dir(j.value("e_direction", "UNDETERMINED"));
  t.hhat_direction = dir(j.value("hhat_direction", "UNDETERMINED"));
  t.absolute_harm_warning = j.value("absolute_harm_warning", false);
  if (j.contains("evidence")) t.evidence = j["evidence"];
  return t;
}

}  // namespace trendlens
