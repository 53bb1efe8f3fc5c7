#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendlens/assessor.hpp"
#include "trendlens/incidents.hpp"

namespace trendlens {

enum class Stratum { Full, Partial, Negative };

std::string to_string(Stratum s);
Stratum stratum_from_string(const std::string& s);
Stratum stratum_of(const Assessment& a);

struct SampleItem {
  std::string sample_id;
  std::string incident_id;
  Stratum stratum = Stratum::Negative;
};

struct StratifiedSample {
  std::vector<SampleItem> items;  // blinded (shuffled) order
  std::uint64_t seed = 0;
  int k = 0;
};

// Draws up to k assessments per stratum (full/partial/negative), uniformly
// and reproducibly for a given seed, then shuffles and assigns neutral
// sample ids. Throws EmptyInput when there is nothing to sample.
StratifiedSample stratified_sample(const std::vector<Assessment>& assessments, int k,
                                   std::uint64_t seed);

// Rater-facing export: one JSON object per line with only sample_id, title,
// description, report_excerpt. Verdicts and strata stay in the sealed
// mapping for later unblinding.
std::string blinded_export_jsonl(const StratifiedSample& sample, const IncidentSet& incidents);
nlohmann::json sealed_mapping_json(const StratifiedSample& sample);

struct RaterLabels {
  Match s_match = Match::Indeterminate;
  Match r_match = Match::Indeterminate;
  std::optional<long long> harm_lower;
  std::optional<long long> harm_upper;
};

struct LabelPair {
  std::string incident_id;
  RaterLabels rater_a;
  RaterLabels rater_b;
};

// Cohen's kappa over generic categorical labels:
// kappa = (p_o - p_e) / (1 - p_e). When p_e == 1 (both raters constant and
// identical) the formula is 0/0; by convention full agreement returns 1 and
// anything else 0.
double cohen_kappa(const std::vector<std::string>& labels_a,
                   const std::vector<std::string>& labels_b,
                   const std::vector<std::string>& categories);

// Fraction of pairs whose (s_match, r_match) labels are identical, in
// percent. Throws EmptyStratum on an empty group.
double percent_agreement(const std::vector<LabelPair>& pairs);

struct BoundMae {
  double mae_lower = 0;
  double mae_upper = 0;
  int included = 0;
  int excluded = 0;  // pairs where either rater omitted bounds
};

BoundMae bound_mae(const std::vector<LabelPair>& pairs);

struct AgreementReport {
  double kappa_s = 0;
  double kappa_r = 0;
  double kappa_full = 0;  // binary full-match vs not
  std::map<std::string, double> per_stratum_pct;
  double mae_lower = 0;
  double mae_upper = 0;
  int n = 0;
  int bounds_excluded = 0;
};

// Scores two raters over the same sample. strata maps incident_id to the
// sealed stratum; pairs without a stratum entry are scored in the kappas but
// skipped in the per-stratum table.
AgreementReport score_agreement(const std::vector<LabelPair>& pairs,
                                const std::map<std::string, Stratum>& strata);

nlohmann::json agreement_report_to_json(const AgreementReport& r);

}  // namespace trendlens
