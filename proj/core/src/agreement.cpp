#include "trendlens/agreement.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <unordered_map>

#include "det_rng.hpp"
#include "trendlens/errors.hpp"
#include "trendlens/harm.hpp"

namespace trendlens {

namespace {

using nlohmann::json;

bool is_full(Match s, Match r) { return s == Match::True && r == Match::True; }

}  // namespace

std::string to_string(Stratum s) {
  switch (s) {
    case Stratum::Full: return "full";
    case Stratum::Partial: return "partial";
    case Stratum::Negative: return "negative";
  }
  return "negative";
}

Stratum stratum_from_string(const std::string& s) {
  if (s == "full") return Stratum::Full;
  if (s == "partial") return Stratum::Partial;
  if (s == "negative") return Stratum::Negative;
  throw Error("unknown stratum: " + s);
}

Stratum stratum_of(const Assessment& a) {
  if (a.s_match.value == Match::True && a.r_match.value == Match::True) return Stratum::Full;
  if (a.s_match.value == Match::False || a.r_match.value == Match::False) {
    return Stratum::Negative;
  }
  return Stratum::Partial;
}

StratifiedSample stratified_sample(const std::vector<Assessment>& assessments, int k,
                                   std::uint64_t seed) {
  if (assessments.empty()) throw EmptyInput("nothing to sample");
  if (k < 1) throw Error("sample size k must be >= 1");

  std::array<std::vector<const Assessment*>, 3> strata;
  for (const auto& a : assessments) {
    strata[static_cast<size_t>(stratum_of(a))].push_back(&a);
  }

  detail::DetRng rng(seed);
  StratifiedSample sample;
  sample.seed = seed;
  sample.k = k;
  for (size_t s = 0; s < strata.size(); ++s) {
    auto picks = rng.sample_indices(strata[s].size(), static_cast<size_t>(k));
    for (size_t idx : picks) {
      sample.items.push_back(
          {"", strata[s][idx]->incident_id, static_cast<Stratum>(s)});
    }
  }
  rng.shuffle(sample.items);
  for (size_t i = 0; i < sample.items.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "S%04zu", i + 1);
    sample.items[i].sample_id = id;
  }
  return sample;
}

std::string blinded_export_jsonl(const StratifiedSample& sample, const IncidentSet& incidents) {
  std::unordered_map<std::string, const IncidentRecord*> by_id;
  for (const auto& rec : incidents.records) by_id[rec.incident_id] = &rec;

  std::string out;
  for (const auto& item : sample.items) {
    json line{{"sample_id", item.sample_id},
              {"title", ""},
              {"description", ""},
              {"report_excerpt", ""}};
    if (auto it = by_id.find(item.incident_id); it != by_id.end()) {
      AssessmentContext ctx = attach_context(*it->second, /*include_report=*/true);
      line["title"] = ctx.title;
      line["description"] = ctx.description;
      line["report_excerpt"] = ctx.report_excerpt.value_or("");
    }
    out += line.dump();
    out += "\n";
  }
  return out;
}

json sealed_mapping_json(const StratifiedSample& sample) {
  json items = json::array();
  for (const auto& item : sample.items) {
    items.push_back(json{{"sample_id", item.sample_id},
                         {"incident_id", item.incident_id},
                         {"stratum", to_string(item.stratum)}});
  }
  return json{{"seed", sample.seed}, {"k", sample.k}, {"items", items}};
}

double cohen_kappa(const std::vector<std::string>& labels_a,
                   const std::vector<std::string>& labels_b,
                   const std::vector<std::string>& categories) {
  if (labels_a.size() != labels_b.size() || labels_a.empty()) {
    throw LengthMismatch("label vectors must have equal, non-zero length");
  }
  std::unordered_map<std::string, size_t> index;
  for (size_t i = 0; i < categories.size(); ++i) index[categories[i]] = i;

  std::vector<double> marginal_a(categories.size(), 0), marginal_b(categories.size(), 0);
  double agree = 0;
  const double n = static_cast<double>(labels_a.size());
  for (size_t i = 0; i < labels_a.size(); ++i) {
    auto ia = index.find(labels_a[i]);
    auto ib = index.find(labels_b[i]);
    if (ia == index.end()) throw UnknownLabel("label not in category set: " + labels_a[i]);
    if (ib == index.end()) throw UnknownLabel("label not in category set: " + labels_b[i]);
    marginal_a[ia->second] += 1;
    marginal_b[ib->second] += 1;
    if (ia->second == ib->second) agree += 1;
  }

  double p_o = agree / n;
  double p_e = 0;
  for (size_t c = 0; c < categories.size(); ++c) {
    p_e += (marginal_a[c] / n) * (marginal_b[c] / n);
  }
  if (p_e >= 1.0) return p_o >= 1.0 ? 1.0 : 0.0;
  return (p_o - p_e) / (1.0 - p_e);
}

double percent_agreement(const std::vector<LabelPair>& pairs) {
  if (pairs.empty()) throw EmptyStratum("no label pairs in stratum");
  double agree = 0;
  for (const auto& p : pairs) {
    if (p.rater_a.s_match == p.rater_b.s_match && p.rater_a.r_match == p.rater_b.r_match) {
      agree += 1;
    }
  }
  return 100.0 * agree / static_cast<double>(pairs.size());
}

BoundMae bound_mae(const std::vector<LabelPair>& pairs) {
  BoundMae mae;
  double sum_lower = 0, sum_upper = 0;
  for (const auto& p : pairs) {
    bool comparable = p.rater_a.harm_lower && p.rater_a.harm_upper && p.rater_b.harm_lower &&
                      p.rater_b.harm_upper;
    if (!comparable) {
      mae.excluded += 1;
      continue;
    }
    sum_lower += std::abs(static_cast<double>(*p.rater_a.harm_lower - *p.rater_b.harm_lower));
    sum_upper += std::abs(static_cast<double>(*p.rater_a.harm_upper - *p.rater_b.harm_upper));
    mae.included += 1;
  }
  if (mae.included == 0) throw NoComparablePairs("no pairs where both raters supplied bounds");
  mae.mae_lower = sum_lower / mae.included;
  mae.mae_upper = sum_upper / mae.included;
  return mae;
}

AgreementReport score_agreement(const std::vector<LabelPair>& pairs,
                                const std::map<std::string, Stratum>& strata) {
  if (pairs.empty()) throw EmptyInput("no label pairs to score");

  const std::vector<std::string> three_way{"true", "false", "indeterminate"};
  const std::vector<std::string> binary{"full", "not_full"};

  std::vector<std::string> s_a, s_b, r_a, r_b, full_a, full_b;
  for (const auto& p : pairs) {
    s_a.push_back(to_string(p.rater_a.s_match));
    s_b.push_back(to_string(p.rater_b.s_match));
    r_a.push_back(to_string(p.rater_a.r_match));
    r_b.push_back(to_string(p.rater_b.r_match));
    full_a.push_back(is_full(p.rater_a.s_match, p.rater_a.r_match) ? "full" : "not_full");
    full_b.push_back(is_full(p.rater_b.s_match, p.rater_b.r_match) ? "full" : "not_full");
  }

  AgreementReport report;
  report.n = static_cast<int>(pairs.size());
  report.kappa_s = cohen_kappa(s_a, s_b, three_way);
  report.kappa_r = cohen_kappa(r_a, r_b, three_way);
  report.kappa_full = cohen_kappa(full_a, full_b, binary);

  std::map<std::string, std::vector<LabelPair>> grouped;
  for (const auto& p : pairs) {
    if (auto it = strata.find(p.incident_id); it != strata.end()) {
      grouped[to_string(it->second)].push_back(p);
    }
  }
  for (const auto& [name, group] : grouped) {
    report.per_stratum_pct[name] = percent_agreement(group);
  }

  try {
    BoundMae mae = bound_mae(pairs);
    report.mae_lower = mae.mae_lower;
    report.mae_upper = mae.mae_upper;
    report.bounds_excluded = mae.excluded;
  } catch (const NoComparablePairs&) {
    report.mae_lower = report.mae_upper = 0;
    report.bounds_excluded = static_cast<int>(pairs.size());
  }
  return report;
}

json agreement_report_to_json(const AgreementReport& r) {
  json per_stratum = json::object();
  for (const auto& [name, pct] : r.per_stratum_pct) per_stratum[name] = pct;
  return json{{"kappa_s", r.kappa_s},
              {"kappa_r", r.kappa_r},
              {"kappa_full", r.kappa_full},
              {"per_stratum_pct", per_stratum},
              {"mae_lower", r.mae_lower},
              {"mae_upper", r.mae_upper},
              {"n", r.n},
              {"bounds_excluded", r.bounds_excluded}};
}

}  // namespace trendlens
