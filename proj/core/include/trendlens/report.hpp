#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendlens/classify.hpp"
#include "trendlens/exposure.hpp"
#include "trendlens/harm.hpp"
#include "trendlens/mq.hpp"

namespace trendlens {

struct HarmEvidenceBlock {
  std::string source;
  int tier = 2;
  bool news_derived = false;
  std::vector<HarmBounds> bounds;  // one per compared period
  HarmTrendOutcome outcome;
};

struct RunMetadata {
  std::string timestamp;
  std::string backend_id;
  std::string config_digest;
  std::string tool_version;
};

struct RunReport {
  MonitoringQuestion mq;
  std::pair<Period, Period> periods;
  std::vector<HarmEvidenceBlock> harm_evidence;
  HarmTrendOutcome merged_harm;
  std::vector<ExposureEstimate> exposure_estimates;
  ExposureTrendOutcome exposure_outcome;
  TrajectoryResult trajectory;
  std::vector<std::string> caveats;
  RunMetadata run_metadata;
};

nlohmann::json report_to_json(const RunReport& report);

// Markdown presentation: monitoring question, harm estimation, trend,
// confidence, exposure, classification box, caveats.
std::string report_to_markdown(const RunReport& report);

// Minimal structural validation applied before any report hits disk.
bool report_schema_check(const nlohmann::json& report, std::string* error = nullptr);

// Write-then-rename so concurrent readers never see a partial file.
void write_text_atomically(const std::string& text, const std::filesystem::path& path);
void write_report_atomically(const RunReport& report, const std::filesystem::path& path);

}  // namespace trendlens
