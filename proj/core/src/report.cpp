#include "trendlens/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "trendlens/errors.hpp"

namespace trendlens {

namespace {

using nlohmann::json;

std::string format_growth(const std::optional<double>& growth) {
  if (!growth) return "n/a";
  if (std::isinf(*growth)) return *growth > 0 ? "from zero" : "to zero";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%+.1f%%", *growth * 100.0);
  return buf;
}

std::string format_quantity(double v) {
  char buf[48];
  if (v >= 1e6 && std::fmod(v, 1e5) == 0) {
    std::snprintf(buf, sizeof(buf), "%.1fM", v / 1e6);
  } else if (std::floor(v) == v && std::fabs(v) < 1e15) {
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
  } else {
    std::snprintf(buf, sizeof(buf), "%g", v);
  }
  return buf;
}

std::string period_label(const Period& p) { return p.start.iso() + ".." + p.end.iso(); }

const char* category_gloss(Category c) {
  switch (c) {
    case Category::Escalating:
      return "Both exposure and harm per unit exposure are moving up; urgent attention.";
    case Category::Mitigating:
      return "Exposure is growing while harm per unit exposure falls; monitor closely.";
    case Category::Concentrating:
      return "Exposure is shrinking while harm per unit exposure rises; targeted measures.";
    case Category::Receding:
      return "Neither dimension is worsening; continue the current strategy.";
    case Category::Unclassifiable:
      return "At least one directional trend could not be determined.";
  }
  return "";
}

Confidence weakest(Confidence a, Confidence b) {
  auto rank = [](Confidence c) { return c == Confidence::High ? 0 : c == Confidence::Medium ? 1 : 2; };
  return rank(a) >= rank(b) ? a : b;
}

const char* arrow(Direction d) {
  switch (d) {
    case Direction::Up: return "↑";
    case Direction::Down: return "↓";
    case Direction::Flat: return "→";
    case Direction::Undetermined: return "?";
  }
  return "?";
}

}  // namespace

json report_to_json(const RunReport& report) {
  json evidence = json::array();
  for (const auto& block : report.harm_evidence) {
    for (const auto& b : block.bounds) {
      json entry = harm_bounds_to_json(b);
      entry["source"] = block.source;
      entry["news_derived"] = block.news_derived;
      entry["status"] = to_string(block.outcome.status);
      entry["flags"] = json::array();
      for (const auto& f : block.outcome.flags) entry["flags"].push_back(f);
      entry["tier"] = block.tier;
      if (block.outcome.growth_rate && !std::isinf(*block.outcome.growth_rate)) {
        entry["growth_rate"] = *block.outcome.growth_rate;
      }
      evidence.push_back(std::move(entry));
    }
  }

  json estimates = json::array();
  for (const auto& e : report.exposure_estimates) estimates.push_back(exposure_estimate_to_json(e));

  return json{{"mq", mq_to_json(report.mq)},
              {"periods", json::array({period_to_json(report.periods.first),
                                       period_to_json(report.periods.second)})},
              {"harm_evidence", evidence},
              {"merged_harm", harm_outcome_to_json(report.merged_harm)},
              {"exposure_estimates", estimates},
              {"exposure_outcome", exposure_outcome_to_json(report.exposure_outcome)},
              {"trajectory", trajectory_to_json(report.trajectory)},
              {"caveats", report.caveats},
              {"run_metadata", json{{"timestamp", report.run_metadata.timestamp},
                                    {"backend_id", report.run_metadata.backend_id},
                                    {"config_digest", report.run_metadata.config_digest},
                                    {"tool_version", report.run_metadata.tool_version}}}};
}

std::string report_to_markdown(const RunReport& report) {
  std::ostringstream md;
  md << "# Monitoring question: " << report.mq.id << "\n\n";
  md << "> " << report.mq.render() << "\n\n";
  md << "- Periods compared: " << period_label(report.periods.first) << " vs "
     << period_label(report.periods.second) << "\n";
  md << "- Harm unit: " << report.mq.harm_unit << "\n";
  if (!report.mq.notes.empty()) md << "- Notes: " << report.mq.notes << "\n";

  md << "\n## Harm estimation (H)\n\n";
  if (report.harm_evidence.empty()) {
    md << "No harm sources were available.\n";
  } else {
    md << "| Source | Tier | Period | Lower | Upper | Full | Partial | Confidence |\n";
    md << "|---|---|---|---|---|---|---|---|\n";
    for (const auto& block : report.harm_evidence) {
      for (const auto& b : block.bounds) {
        md << "| " << block.source << " | " << block.tier << " | " << period_label(b.period)
           << " | " << b.lower << " | " << b.upper << " | " << b.full_count << " | "
           << b.partial_count << " | " << to_string(b.confidence) << " |\n";
      }
    }
    md << "\nPer-source outcomes:\n";
    for (const auto& block : report.harm_evidence) {
      md << "- " << block.source << ": " << to_string(block.outcome.status);
      if (block.outcome.growth_rate) md << " (" << format_growth(block.outcome.growth_rate) << ")";
      if (block.outcome.overspecified()) md << " [OVERSPECIFIED]";
      md << "\n";
    }
  }
  md << "\n**Trend (H):** " << to_string(report.merged_harm.status);
  if (report.merged_harm.growth_rate) {
    md << " (" << format_growth(report.merged_harm.growth_rate) << " on lower-bound totals)";
  }
  if (!report.merged_harm.source.empty()) md << " — from " << report.merged_harm.source;
  md << "\n";
  {
    Confidence harm_conf = Confidence::Low;
    bool found = false;
    for (const auto& block : report.harm_evidence) {
      if (block.source != report.merged_harm.source) continue;
      found = true;
      harm_conf = Confidence::High;
      for (const auto& b : block.bounds) harm_conf = weakest(harm_conf, b.confidence);
    }
    md << "**Confidence:** " << (found ? to_string(harm_conf) : std::string("LOW")) << "\n";
  }

  md << "\n## Exposure estimation (E)\n\n";
  if (report.exposure_estimates.empty()) {
    md << "No exposure estimate was available.\n";
  } else {
    md << "| Period | Point | Plausible range | OOM | Tier | Confidence |\n";
    md << "|---|---|---|---|---|---|\n";
    for (const auto& e : report.exposure_estimates) {
      md << "| " << period_label(e.period) << " | " << format_quantity(e.point) << " | "
         << format_quantity(e.low) << " - " << format_quantity(e.high) << " | 10^" << e.oom
         << " | " << e.tier << " | " << to_string(e.confidence) << " |\n";
    }
    md << "\nAssumptions:\n";
    for (const auto& e : report.exposure_estimates) {
      for (const auto& a : e.assumptions) md << "- " << a << "\n";
    }
  }
  md << "\n**Trend (E):** " << to_string(report.exposure_outcome.status);
  if (report.exposure_outcome.growth_rate) {
    md << " (" << format_growth(report.exposure_outcome.growth_rate) << " on point estimates)";
  }
  md << "\n";
  if (report.exposure_outcome.resolved_by) {
    md << "Divergent bounds resolved by expert elicitation: "
       << report.exposure_outcome.resolved_by->expert_panel << " ("
       << report.exposure_outcome.resolved_by->rationale << ")\n";
  }
  {
    Confidence expo_conf = Confidence::High;
    for (const auto& e : report.exposure_estimates) expo_conf = weakest(expo_conf, e.confidence);
    if (report.exposure_estimates.empty()) expo_conf = Confidence::Low;
    md << "**Confidence:** " << to_string(expo_conf) << "\n";
  }

  md << "\n## Classification\n\n";
  md << "**" << to_string(report.trajectory.category) << "**  [E " << arrow(report.trajectory.e_direction)
     << ", Ĥ " << arrow(report.trajectory.hhat_direction) << "]\n\n";
  md << category_gloss(report.trajectory.category) << "\n";
  if (report.trajectory.category == Category::Receding &&
      report.trajectory.e_direction == Direction::Flat &&
      report.trajectory.hhat_direction == Direction::Flat) {
    md << "(Stable: both directions flat.)\n";
  }
  if (report.trajectory.absolute_harm_warning) {
    md << "\n**Warning:** absolute harm may still be rising even though harm per unit exposure "
          "falls; continued monitoring warranted.\n";
  }
  md << "\nGovernance-urgency ordering used in summaries: Escalating > Concentrating > "
        "Mitigating > Receding (a convention of this tool, not part of the grid).\n";

  md << "\n## Caveats\n\n";
  for (const auto& caveat : report.caveats) md << "- " << caveat << "\n";

  md << "\n---\nGenerated " << report.run_metadata.timestamp << " | backend "
     << report.run_metadata.backend_id << " | config " << report.run_metadata.config_digest
     << " | tool v" << report.run_metadata.tool_version << "\n";
  return md.str();
}

bool report_schema_check(const json& report, std::string* error) {
  auto fail = [&](const std::string& msg) {
    if (error) *error = msg;
    return false;
  };
  if (!report.is_object()) return fail("report is not an object");
  for (const char* key : {"mq", "periods", "harm_evidence", "merged_harm", "exposure_estimates",
                          "exposure_outcome", "trajectory", "caveats", "run_metadata"}) {
    if (!report.contains(key)) return fail(std::string("missing key: ") + key);
  }
  const json& mq = report["mq"];
  for (const char* key : {"id", "subject", "opportunity", "risk_event", "harm_unit"}) {
    if (!mq.contains(key) || !mq[key].is_string() || mq[key].get<std::string>().empty()) {
      return fail(std::string("mq missing: ") + key);
    }
  }
  if (!report["periods"].is_array() || report["periods"].size() != 2) {
    return fail("periods must hold exactly two entries");
  }
  if (!report["caveats"].is_array() || report["caveats"].empty()) {
    return fail("caveats must be non-empty");
  }
  if (!report["trajectory"].contains("category")) return fail("trajectory missing category");
  const json& meta = report["run_metadata"];
  for (const char* key : {"timestamp", "backend_id", "config_digest", "tool_version"}) {
    if (!meta.contains(key)) return fail(std::string("run_metadata missing: ") + key);
  }
  return true;
}

void write_text_atomically(const std::string& text, const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, path);
}

void write_report_atomically(const RunReport& report, const std::filesystem::path& path) {
  json doc = report_to_json(report);
  std::string error;
  if (!report_schema_check(doc, &error)) {
    throw Error("report failed schema self-check: " + error);
  }
  write_text_atomically(doc.dump(2) + "\n", path);
}

}  // namespace trendlens
