#include "trendlens/incidents.hpp"

#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "csv.hpp"
#include "trendlens/errors.hpp"

namespace trendlens {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Multi-valued cells use ';' or ',' between entries (both appear in the wild).
std::vector<std::string> split_list(const std::string& cell) {
  std::vector<std::string> out;
  std::string current;
  for (char c : cell) {
    if (c == ';' || c == ',') {
      std::string v = trim(current);
      if (!v.empty()) out.push_back(std::move(v));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  std::string v = trim(current);
  if (!v.empty()) out.push_back(std::move(v));
  return out;
}

int require_column(const csv::Table& table, const std::string& name, const std::string& file) {
  int idx = table.column(name);
  if (idx < 0) throw SchemaMismatch(file + ": missing required column '" + name + "'");
  return idx;
}

std::string cell(const std::vector<std::string>& row, int idx) {
  return idx >= 0 && idx < static_cast<int>(row.size()) ? row[static_cast<size_t>(idx)] : "";
}

// Deduplicates by incident_id (first occurrence wins) and drops records with
// missing ids or unparseable dates into the quarantine count.
IncidentSet finalize(std::vector<std::pair<IncidentRecord, bool>>&& parsed) {
  IncidentSet set;
  std::unordered_set<std::string> seen;
  for (auto& [record, date_ok] : parsed) {
    if (!date_ok || record.incident_id.empty()) {
      set.load_stats.quarantined += 1;
      continue;
    }
    if (!seen.insert(record.incident_id).second) {
      set.load_stats.duplicate_ids += 1;
      continue;
    }
    set.records.push_back(std::move(record));
  }
  set.load_stats.loaded = static_cast<int>(set.records.size());
  return set;
}

}  // namespace

std::string to_string(Source s) {
  switch (s) {
    case Source::AIID: return "AIID";
    case Source::OECD_AIM: return "OECD_AIM";
    case Source::CANONICAL: return "CANONICAL";
  }
  return "CANONICAL";
}

Source source_from_string(const std::string& s) {
  if (s == "AIID") return Source::AIID;
  if (s == "OECD_AIM") return Source::OECD_AIM;
  if (s == "CANONICAL") return Source::CANONICAL;
  throw Error("unknown incident source: " + s);
}

IncidentSet load_aiid(const std::filesystem::path& snapshot_path) {
  namespace fs = std::filesystem;
  fs::path incidents_file = snapshot_path;
  fs::path reports_file;
  if (fs::is_directory(snapshot_path)) {
    incidents_file = snapshot_path / "incidents.csv";
    reports_file = snapshot_path / "reports.csv";
  } else {
    reports_file = snapshot_path.parent_path() / "reports.csv";
  }
  if (!fs::exists(incidents_file)) {
    throw FileNotFound("AIID incident table not found: " + incidents_file.string());
  }

  csv::Table incidents = csv::read_file(incidents_file);
  const std::string iname = incidents_file.filename().string();
  int c_id = require_column(incidents, "incident_id", iname);
  int c_date = require_column(incidents, "date", iname);
  int c_title = require_column(incidents, "title", iname);
  int c_desc = require_column(incidents, "description", iname);
  int c_deployer = require_column(incidents, "alleged_deployer", iname);
  int c_developer = require_column(incidents, "alleged_developer", iname);
  int c_harmed = require_column(incidents, "alleged_harmed_parties", iname);
  if (incidents.rows.empty()) {
    throw EmptySnapshot("AIID incident table has no rows: " + incidents_file.string());
  }

  // Reports joined by incident_id, preserving file order.
  std::unordered_map<std::string, std::vector<ReportRef>> reports_by_incident;
  if (fs::exists(reports_file)) {
    csv::Table reports = csv::read_file(reports_file);
    const std::string rname = reports_file.filename().string();
    int r_id = require_column(reports, "report_id", rname);
    int r_incident = require_column(reports, "incident_id", rname);
    int r_text = require_column(reports, "text", rname);
    int r_url = reports.column("url");
    for (const auto& row : reports.rows) {
      ReportRef ref;
      ref.report_id = cell(row, r_id);
      ref.text = cell(row, r_text);
      std::string url = cell(row, r_url);
      if (!url.empty()) ref.url = url;
      reports_by_incident[cell(row, r_incident)].push_back(std::move(ref));
    }
  }

  std::vector<std::pair<IncidentRecord, bool>> parsed;
  parsed.reserve(incidents.rows.size());
  for (const auto& row : incidents.rows) {
    IncidentRecord rec;
    rec.source = Source::AIID;
    rec.incident_id = trim(cell(row, c_id));
    rec.title = cell(row, c_title);
    rec.description = cell(row, c_desc);
    rec.deployers = split_list(cell(row, c_deployer));
    rec.developers = split_list(cell(row, c_developer));
    rec.harmed_parties = split_list(cell(row, c_harmed));
    if (auto it = reports_by_incident.find(rec.incident_id); it != reports_by_incident.end()) {
      rec.reports = it->second;
    }
    auto date = Date::try_parse(trim(cell(row, c_date)));
    if (date) rec.date = *date;
    parsed.emplace_back(std::move(rec), date.has_value());
  }
  return finalize(std::move(parsed));
}

IncidentSet load_oecd(const std::filesystem::path& export_path) {
  if (!std::filesystem::exists(export_path)) {
    throw FileNotFound("OECD AIM export not found: " + export_path.string());
  }
  csv::Table table = csv::read_file(export_path);
  const std::string fname = export_path.filename().string();
  int c_id = require_column(table, "id", fname);
  int c_date = require_column(table, "date", fname);
  int c_title = require_column(table, "title", fname);
  int c_desc = require_column(table, "description", fname);
  int c_harm = table.column("harm_type");
  int c_country = table.column("country");
  if (table.rows.empty()) {
    throw EmptySnapshot("OECD AIM export has no rows: " + export_path.string());
  }

  std::vector<std::pair<IncidentRecord, bool>> parsed;
  parsed.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    IncidentRecord rec;
    rec.source = Source::OECD_AIM;
    rec.incident_id = trim(cell(row, c_id));
    rec.title = cell(row, c_title);
    rec.description = cell(row, c_desc);
    // Harm type and country are kept as trailing sentences of the canonical
    // description so the assessor sees them (see docs/column_mapping.md).
    std::string harm = trim(cell(row, c_harm));
    std::string country = trim(cell(row, c_country));
    if (!harm.empty()) rec.description += "\nHarm type: " + harm + ".";
    if (!country.empty()) rec.description += "\nCountry: " + country + ".";
    auto date = Date::try_parse(trim(cell(row, c_date)));
    if (date) rec.date = *date;
    parsed.emplace_back(std::move(rec), date.has_value());
  }
  return finalize(std::move(parsed));
}

IncidentSet load_canonical(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("canonical incident file not found: " + path.string());

  std::vector<std::pair<IncidentRecord, bool>> parsed;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      IncidentRecord rec = incident_from_json(j);
      rec.source = Source::CANONICAL;
      parsed.emplace_back(std::move(rec), true);
    } catch (const std::exception&) {
      parsed.emplace_back(IncidentRecord{}, false);
    }
  }
  if (parsed.empty()) throw EmptySnapshot("canonical incident file has no rows: " + path.string());
  return finalize(std::move(parsed));
}

std::string truncate_codepoints(const std::string& text, int max_chars) {
  if (max_chars <= 0) return "";
  int count = 0;
  size_t i = 0;
  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    size_t len = (c < 0x80) ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 1;
    if (count == max_chars) break;
    i += len;
    count += 1;
  }
  return text.substr(0, i);
}

AssessmentContext attach_context(const IncidentRecord& record, bool include_report, int max_chars) {
  AssessmentContext ctx;
  ctx.title = record.title;
  ctx.description = record.description;
  ctx.deployers = record.deployers;
  ctx.developers = record.developers;
  ctx.harmed_parties = record.harmed_parties;
  if (include_report) {
    for (const auto& report : record.reports) {
      if (!report.text.empty()) {
        ctx.report_excerpt = truncate_codepoints(report.text, max_chars);
        break;
      }
    }
  }
  return ctx;
}

IncidentSet filter_by_period(const IncidentSet& set, const Period& period) {
  IncidentSet out;
  for (const auto& rec : set.records) {
    if (period.contains(rec.date)) out.records.push_back(rec);
  }
  out.load_stats.loaded = static_cast<int>(out.records.size());
  return out;
}

json incident_to_json(const IncidentRecord& r) {
  json reports = json::array();
  for (const auto& rep : r.reports) {
    json jr{{"report_id", rep.report_id}, {"text", rep.text}};
    if (rep.url) jr["url"] = *rep.url;
    reports.push_back(std::move(jr));
  }
  return json{{"incident_id", r.incident_id},
              {"source", to_string(r.source)},
              {"date", r.date.iso()},
              {"title", r.title},
              {"description", r.description},
              {"deployers", r.deployers},
              {"developers", r.developers},
              {"harmed_parties", r.harmed_parties},
              {"reports", reports}};
}

IncidentRecord incident_from_json(const json& j) {
  IncidentRecord r;
  r.incident_id = j.at("incident_id").get<std::string>();
  if (j.contains("source")) r.source = source_from_string(j["source"].get<std::string>());
  r.date = Date::parse(j.at("date").get<std::string>());
  r.title = j.value("title", "");
  r.description = j.value("description", "");
  r.deployers = j.value("deployers", std::vector<std::string>{});
  r.developers = j.value("developers", std::vector<std::string>{});
  r.harmed_parties = j.value("harmed_parties", std::vector<std::string>{});
  if (j.contains("reports")) {
    for (const auto& jr : j["reports"]) {
      ReportRef ref;
      ref.report_id = jr.value("report_id", "");
      ref.text = jr.value("text", "");
      if (jr.contains("url") && jr["url"].is_string()) ref.url = jr["url"].get<std::string>();
      r.reports.push_back(std::move(ref));
    }
  }
  return r;
}

}  // namespace trendlens
