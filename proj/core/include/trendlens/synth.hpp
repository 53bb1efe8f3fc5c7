#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendlens/classify.hpp"
#include "trendlens/incidents.hpp"
#include "trendlens/mq.hpp"

namespace trendlens::synth {

// The six sequential reporting-funnel filters. An event reaches the database
// only if it passes all of them, so the effective reporting propensity is
// the product.
struct FunnelStages {
  double detection = 1.0;
  double attribution = 1.0;
  double recording = 1.0;
  double disclosure = 1.0;  // disclosure and reporting, one stage
  double capture = 1.0;
  double scope = 1.0;

  double product() const {
    return detection * attribution * recording * disclosure * capture * scope;
  }
};

// Assessor-noise knob (beyond the funnel model): each ground-truth label is
// independently flipped to false or blurred to indeterminate with the given
// probabilities. Defaults off.
struct NoiseModel {
  double flip_prob = 0.0;
  double indeterminate_prob = 0.0;
};

struct GroundTruthConfig {
  std::vector<Period> periods;
  std::vector<double> exposure;        // E(t), per period
  std::vector<double> hazard;          // h(t): expected harm events per exposure unit
  std::vector<FunnelStages> funnel;    // one entry (shared) or one per period
  std::uint64_t seed = 0;
  NoiseModel noise;

  const FunnelStages& funnel_for(size_t period_index) const {
    return funnel.size() == 1 ? funnel.front() : funnel[period_index];
  }
  void validate() const;  // throws InvalidConfig
};

GroundTruthConfig ground_truth_from_json(const nlohmann::json& j);
nlohmann::json ground_truth_to_json(const GroundTruthConfig& c);

struct SyntheticStream {
  std::vector<IncidentRecord> incidents;     // funnel survivors, marker-tagged
  std::vector<double> expected_counts;       // h(t) * E(t)
  std::vector<long long> realized_counts;    // Poisson draws
  std::vector<long long> observed_counts;    // after per-event thinning
};

// Per period t, draws realized events from Poisson(h(t) * E(t)); each event
// independently survives the funnel with the stage product and becomes a
// canonical incident dated uniformly within the period. Fully seeded.
SyntheticStream generate(const GroundTruthConfig& config);

// Exact classification of the configured ground truth (no sampling): E
// direction from the exposure series, H-hat from the growth-rate comparison
// with the same dead band the pipeline uses. Requires exactly two periods.
Category true_category(const GroundTruthConfig& config, double dead_band = 0.10);

struct RecoveryReport {
  std::string config_digest;
  std::string truth;  // true category
  int n_runs = 0;
  double recovery_rate = 0;
  double abstention_rate = 0;
  std::map<std::string, std::map<std::string, int>> confusion;  // true -> predicted -> count
  std::map<std::string, int> harm_status_counts;                // pipeline harm statuses
};

// Runs generate -> ingest -> stub assess -> aggregate -> classify once per
// seed offset and reports how often the pipeline recovers the configured
// ground-truth category. Ground-truth exposure enters the pipeline as a
// tier-1 source.
RecoveryReport recovery_experiment(const GroundTruthConfig& config,
                                   const PipelineSettings& settings, int n_runs);

nlohmann::json recovery_report_to_json(const RecoveryReport& r);

}  // namespace trendlens::synth
