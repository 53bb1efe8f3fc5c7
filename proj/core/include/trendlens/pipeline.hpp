#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendlens/agreement.hpp"
#include "trendlens/assessor.hpp"
#include "trendlens/classify.hpp"
#include "trendlens/exposure.hpp"
#include "trendlens/harm.hpp"
#include "trendlens/incidents.hpp"
#include "trendlens/report.hpp"

namespace trendlens {

struct DatabaseInput {
  std::filesystem::path path;
  std::string format;  // aiid | oecd | canonical
};

// A harm reading copied from an existing reporting system (tier 1) or a
// published proxy series (tier 2): per-period totals declared in the config
// rather than derived from per-incident assessments.
struct DeclaredCount {
  Period period;
  long long lower = 0;
  long long upper = 0;
  std::optional<long long> full_count;  // defaults to the lower total
};

struct DeclaredHarmSource {
  std::string name;
  int tier = 1;
  bool news_derived = false;
  std::string citation;
  std::vector<DeclaredCount> counts;
};

struct RunConfig {
  MonitoringQuestion mq;
  std::vector<DeclaredHarmSource> harm_sources;
  std::vector<ProxySource> exposure_proxies;
  std::vector<StubRule> stub_rules;
  nlohmann::json raw;
};

RunConfig run_config_from_json(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

struct RunOptions {
  std::vector<DatabaseInput> databases;
  std::string backend_kind = "stub";  // stub | remote
  RemoteBackendConfig remote;
  std::optional<Date> run_date;  // defaults to the current date
  PipelineSettings settings;
  RetryPolicy retry;
  bool include_report_text = false;
  std::optional<std::filesystem::path> elicitation_file;
  std::optional<std::filesystem::path> exposure_estimates_file;  // manual tier-3 estimates
  bool normalize_metadata = false;  // deterministic timestamps for comparisons
  int concurrency = 4;
};

struct RunArtifacts {
  RunLog run_log;
  std::map<std::string, std::vector<Assessment>> assessments_by_source;
  std::map<std::string, std::vector<IncidentRecord>> incidents_by_source;
};

// load -> period filter -> assess -> aggregate per source -> merge ->
// exposure -> classify -> report. Declared harm sources take priority over
// databases in the merge, in declaration order.
RunReport execute_run(const RunConfig& config, const RunOptions& options,
                      RunArtifacts* artifacts = nullptr);

// Emits report.json, report.md, run_log.jsonl and per-source
// assessments/incidents JSON-lines into out_dir.
void write_run_outputs(const RunReport& report, const RunArtifacts& artifacts,
                       const std::filesystem::path& out_dir);

struct AgreementSampleResult {
  StratifiedSample sample;
  std::string blinded_jsonl;
  nlohmann::json sealed_mapping;
};

// Sampling mode over a completed run directory (reads the per-source
// assessment and incident files written by write_run_outputs).
AgreementSampleResult agreement_sample_run_dir(const std::filesystem::path& run_dir, int k,
                                               std::uint64_t seed);

// Scoring mode over two rater files plus the sealed mapping.
AgreementReport agreement_score_files(const std::filesystem::path& rater_a,
                                      const std::filesystem::path& rater_b,
                                      const std::filesystem::path& mapping_file);

Date date_today();

}  // namespace trendlens
