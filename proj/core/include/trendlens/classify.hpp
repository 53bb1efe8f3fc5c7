#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "trendlens/exposure.hpp"
#include "trendlens/harm.hpp"

namespace trendlens {

enum class Direction { Up, Down, Flat, Undetermined };
enum class Category { Escalating, Mitigating, Concentrating, Receding, Unclassifiable };

std::string to_string(Direction d);
std::string to_string(Category c);
Category category_from_string(const std::string& s);

// Aggregation and classification knobs shared by the run pipeline and the
// simulator's recovery experiments.
struct PipelineSettings {
  int min_full = 3;
  double overspec_ratio = 5.0;
  double dead_band = 0.10;
};

struct TrajectoryResult {
  Category category = Category::Unclassifiable;
  Direction e_direction = Direction::Undetermined;
  Direction hhat_direction = Direction::Undetermined;
  bool absolute_harm_warning = false;
  nlohmann::json evidence;  // harm/exposure outcomes, growth rates, tiers, confidences
};

Direction to_direction(TrendStatus status);

// Harm-per-exposure direction from the growth-rate comparison (never from
// pointwise division). Undetermined whenever either trend abstained or is
// still divergent; otherwise the growth difference is compared against the
// dead band.
Direction derive_hhat(const HarmTrendOutcome& harm, const ExposureTrendOutcome& exposure,
                      double dead_band = 0.10);

// The 2x2 trajectory grid, totalised over flat arrows: a strict E direction
// decides Escalating/Receding, a strict H-hat direction decides
// Mitigating/Concentrating, and (flat, flat) counts as Receding since
// neither dimension is worsening. Any undetermined input is unclassifiable.
Category classify_directions(Direction e_direction, Direction hhat_direction);

// Builds the full result: category, directions, the absolute-harm warning
// (mitigating label while absolute harm still rises), and the evidence
// trail. extra_evidence is merged into the trail (tiers, confidences,
// per-source bounds).
TrajectoryResult annotate(const HarmTrendOutcome& harm, const ExposureTrendOutcome& exposure,
                          double dead_band = 0.10,
                          const nlohmann::json& extra_evidence = nlohmann::json::object());

struct TransitionLabel {
  Category from = Category::Unclassifiable;
  Category to = Category::Unclassifiable;
  std::string interpretation_key;  // "possible successful intervention", ...
  std::string text;
};

TransitionLabel transition(const TrajectoryResult& prev, const TrajectoryResult& curr);

nlohmann::json trajectory_to_json(const TrajectoryResult& t);
TrajectoryResult trajectory_from_json(const nlohmann::json& j);

}  // namespace trendlens
