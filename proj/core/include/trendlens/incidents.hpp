#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendlens/dates.hpp"
#include "trendlens/mq.hpp"

namespace trendlens {

enum class Source { AIID, OECD_AIM, CANONICAL };

std::string to_string(Source s);
Source source_from_string(const std::string& s);

struct ReportRef {
  std::string report_id;
  std::string text;
  std::optional<std::string> url;

  bool operator==(const ReportRef&) const = default;
};

struct IncidentRecord {
  std::string incident_id;
  Source source = Source::CANONICAL;
  Date date;
  std::string title;
  std::string description;
  std::vector<std::string> deployers;
  std::vector<std::string> developers;
  std::vector<std::string> harmed_parties;
  std::vector<ReportRef> reports;

  bool operator==(const IncidentRecord&) const = default;
};

struct LoadStats {
  int loaded = 0;
  int quarantined = 0;
  int duplicate_ids = 0;

  bool operator==(const LoadStats&) const = default;
};

struct IncidentSet {
  std::vector<IncidentRecord> records;
  LoadStats load_stats;
};

// What the assessor sees for one incident: metadata plus, optionally, the
// first linked report with non-empty text (truncated).
struct AssessmentContext {
  std::string title;
  std::string description;
  std::vector<std::string> deployers;
  std::vector<std::string> developers;
  std::vector<std::string> harmed_parties;
  std::optional<std::string> report_excerpt;
};

// AIID snapshot export: a directory holding incidents.csv and reports.csv
// (column mapping documented in docs/column_mapping.md). Records with
// unparseable dates are quarantined; duplicate incident ids keep the first
// occurrence and are counted.
IncidentSet load_aiid(const std::filesystem::path& snapshot_path);

// OECD AIM tabular export: one CSV of incident-level rows.
IncidentSet load_oecd(const std::filesystem::path& export_path);

// Canonical interchange: JSON-lines, one IncidentRecord per line.
IncidentSet load_canonical(const std::filesystem::path& path);

AssessmentContext attach_context(const IncidentRecord& record, bool include_report,
                                 int max_chars = 4000);

IncidentSet filter_by_period(const IncidentSet& set, const Period& period);

// Truncates UTF-8 text to at most max_chars code points, never splitting a
// multi-byte sequence.
std::string truncate_codepoints(const std::string& text, int max_chars);

nlohmann::json incident_to_json(const IncidentRecord& r);
IncidentRecord incident_from_json(const nlohmann::json& j);

}  // namespace trendlens
