#include "trendlens/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "digest.hpp"
#include "trendlens/errors.hpp"
#include "trendlens/version.hpp"

namespace trendlens {

namespace {

using nlohmann::json;

std::string slug(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!out.empty() && out.back() != '-') {
      out.push_back('-');
    }
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out.empty() ? "source" : out;
}

std::string now_utc_iso() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

IncidentSet load_database(const DatabaseInput& db) {
  if (db.format == "aiid") return load_aiid(db.path);
  if (db.format == "oecd") return load_oecd(db.path);
  if (db.format == "canonical") return load_canonical(db.path);
  throw Error("unknown database format '" + db.format + "' (expected aiid|oecd|canonical)");
}

HarmBounds declared_bounds(const DeclaredHarmSource& source, const Period& period, int min_full) {
  HarmBounds b;
  b.period = period;
  b.tier = source.tier;
  for (const auto& count : source.counts) {
    if (!(count.period == period)) continue;
    b.lower = count.lower;
    b.upper = count.upper;
    long long full = count.full_count.value_or(count.lower);
    b.full_count = static_cast<int>(std::min<long long>(full, 1'000'000'000));
    break;
  }
  b.confidence = label_confidence(source.tier, b.full_count, min_full);
  return b;
}

struct ExposureInputs {
  std::optional<ExposureEstimate> e1, e2;
};

ExposureInputs gather_exposure(const RunConfig& config, const RunOptions& options,
                               const Period& p1, const Period& p2) {
  ExposureInputs inputs;

  // Manually authored estimates (e.g. tier-3 expert files) take precedence.
  if (options.exposure_estimates_file) {
    std::ifstream in(*options.exposure_estimates_file);
    if (!in) {
      throw FileNotFound("exposure estimates file not found: " +
                         options.exposure_estimates_file->string());
    }
    json doc = json::parse(in);
    for (const auto& j : doc.is_array() ? doc : json::array({doc})) {
      ExposureEstimate e = exposure_estimate_from_json(j);
      if (e.period == p1) inputs.e1 = e;
      if (e.period == p2) inputs.e2 = e;
    }
  }

  auto has_proxies_for = [&](const Period& p) {
    return std::any_of(config.exposure_proxies.begin(), config.exposure_proxies.end(),
                       [&](const ProxySource& s) { return s.period == p; });
  };
  if (!inputs.e1 && has_proxies_for(p1)) {
    inputs.e1 = combine_proxies(config.exposure_proxies, p1);
  }
  if (!inputs.e2 && has_proxies_for(p2)) {
    inputs.e2 = combine_proxies(config.exposure_proxies, p2);
  }
  return inputs;
}

bool bounds_span_two_ooms(const HarmBounds& b) {
  return b.lower > 0 && static_cast<double>(b.upper) / static_cast<double>(b.lower) > 100.0;
}

}  // namespace

Date date_today() {
  auto now = std::chrono::system_clock::now();
  auto days = std::chrono::floor<std::chrono::days>(now.time_since_epoch()).count();
  return Date::from_serial(days);
}

RunConfig run_config_from_json(const json& doc) {
  RunConfig config;
  config.raw = doc;
  config.mq = mq_from_json(doc);

  if (doc.contains("harm_sources")) {
    for (const auto& js : doc["harm_sources"]) {
      DeclaredHarmSource source;
      source.name = js.at("name").get<std::string>();
      source.tier = js.value("tier", 1);
      source.news_derived = js.value("news_derived", false);
      source.citation = js.value("citation", "");
      for (const auto& jc : js.at("counts")) {
        DeclaredCount count;
        count.period = period_from_json(jc.at("period"));
        count.lower = jc.at("lower").get<long long>();
        count.upper = jc.at("upper").get<long long>();
        if (count.lower < 0 || count.upper < count.lower) {
          throw MalformedConfig("declared counts need 0 <= lower <= upper for " + source.name);
        }
        if (jc.contains("full_count")) count.full_count = jc["full_count"].get<long long>();
        source.counts.push_back(count);
      }
      config.harm_sources.push_back(std::move(source));
    }
  }

  if (doc.contains("exposure")) {
    for (const auto& jp : doc["exposure"]) {
      config.exposure_proxies.push_back(proxy_source_from_json(jp));
    }
  }

  if (doc.contains("assessor") && doc["assessor"].contains("stub_rules")) {
    config.stub_rules = stub_rules_from_json(doc["assessor"]["stub_rules"]);
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("config not found: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw MalformedConfig(std::string("config is not valid JSON: ") + e.what());
  }
  return run_config_from_json(doc);
}

RunReport execute_run(const RunConfig& config, const RunOptions& options, RunArtifacts* artifacts) {
  const MonitoringQuestion& mq = config.mq;
  const Date run_date = options.run_date.value_or(date_today());
  const auto [p1, p2] = derive_periods(mq.timeframe, run_date);
  const PipelineSettings& settings = options.settings;

  std::unique_ptr<Backend> owned_backend;
  if (options.backend_kind == "stub") {
    owned_backend = std::make_unique<StubBackend>(config.stub_rules);
  } else if (options.backend_kind == "remote") {
    owned_backend = make_remote_backend(options.remote);
  } else {
    throw Error("unknown backend '" + options.backend_kind + "' (expected stub|remote)");
  }
  Backend& backend = *owned_backend;
  const std::string backend_id = backend.id() + "+" + kPromptVersion;

  RunArtifacts local_artifacts;
  RunArtifacts& art = artifacts ? *artifacts : local_artifacts;
  art.run_log.record(json{{"event", "run_start"},
                          {"backend_id", backend_id},
                          {"temperature", options.backend_kind == "remote"
                                              ? options.remote.temperature
                                              : kDefaultTemperature},
                          {"max_tokens", options.backend_kind == "remote"
                                             ? options.remote.max_tokens
                                             : kDefaultMaxTokens},
                          {"tool_version", kVersion}});

  RunReport report;
  report.mq = mq;
  report.periods = {p1, p2};

  // --- Harm: declared sources first (they outrank news-derived databases
  // in the merge), then databases in command-line order.
  std::vector<std::pair<std::string, HarmTrendOutcome>> outcomes;
  for (const auto& source : config.harm_sources) {
    HarmEvidenceBlock block;
    block.source = source.name;
    block.tier = source.tier;
    block.news_derived = source.news_derived;
    block.bounds = {declared_bounds(source, p1, settings.min_full),
                    declared_bounds(source, p2, settings.min_full)};
    block.outcome = harm_trend(block.bounds[0], block.bounds[1], settings.min_full,
                               settings.overspec_ratio);
    outcomes.emplace_back(block.source, block.outcome);
    report.harm_evidence.push_back(std::move(block));
  }

  AssessOptions assess_options;
  assess_options.include_report = options.include_report_text;
  assess_options.run_log = &art.run_log;

  std::vector<MonitoringQuestion> mq_list{mq};
  for (const auto& db : options.databases) {
    IncidentSet all = load_database(db);
    std::string label = slug(db.path.stem().string());
    // Keep labels unique when the same stem appears twice.
    int suffix = 2;
    std::string base = label;
    while (std::any_of(report.harm_evidence.begin(), report.harm_evidence.end(),
                       [&](const HarmEvidenceBlock& b) { return b.source == label; })) {
      label = base + "-" + std::to_string(suffix++);
    }

    HarmEvidenceBlock block;
    block.source = label;
    block.tier = 2;  // incident databases are tier 2
    block.news_derived = true;

    for (const Period& period : {p1, p2}) {
      IncidentSet sliced = filter_by_period(all, period);
      auto assessed = assess_batch(backend, mq_list, sliced.records, options.retry,
                                   options.concurrency, assess_options);
      std::vector<Assessment> assessments;
      assessments.reserve(assessed.size());
      for (auto& [mq_id, a] : assessed) assessments.push_back(std::move(a));

      block.bounds.push_back(
          harm_bounds(partition(assessments), period, mq.harm_unit, block.tier,
                      settings.min_full));

      auto& sink = art.assessments_by_source[label];
      sink.insert(sink.end(), assessments.begin(), assessments.end());
      auto& incident_sink = art.incidents_by_source[label];
      incident_sink.insert(incident_sink.end(), sliced.records.begin(), sliced.records.end());
    }
    block.outcome =
        harm_trend(block.bounds[0], block.bounds[1], settings.min_full, settings.overspec_ratio);
    outcomes.emplace_back(block.source, block.outcome);
    report.harm_evidence.push_back(std::move(block));
  }

  if (!outcomes.empty()) {
    report.merged_harm = merge_sources(outcomes);
  }

  // --- Exposure.
  ExposureInputs exposure = gather_exposure(config, options, p1, p2);
  if (exposure.e1 && exposure.e2) {
    // Estimates whose plausible range spans more than two orders of
    // magnitude drop to tier 4 and are excluded from trend derivation.
    for (auto* e : {&*exposure.e1, &*exposure.e2}) {
      if (tier4_check(e->low, e->high) == Tier4Check::Abstain) {
        e->tier = 4;
        e->confidence = Confidence::Low;
      }
    }
    report.exposure_outcome = exposure_trend(*exposure.e1, *exposure.e2);
    if (report.exposure_outcome.status == TrendStatus::Divergent && options.elicitation_file) {
      std::ifstream in(*options.elicitation_file);
      if (!in) {
        throw FileNotFound("elicitation file not found: " + options.elicitation_file->string());
      }
      report.exposure_outcome =
          resolve_divergence(report.exposure_outcome, elicitation_from_json(json::parse(in)));
    }
  } else {
    report.exposure_outcome.status = TrendStatus::Abstain;
  }
  if (exposure.e1) report.exposure_estimates.push_back(*exposure.e1);
  if (exposure.e2) report.exposure_estimates.push_back(*exposure.e2);

  // --- Classification.
  json extra = json::object();
  {
    json tiers = json::array();
    for (const auto& block : report.harm_evidence) {
      tiers.push_back(json{{"source", block.source},
                           {"tier", block.tier},
                           {"status", to_string(block.outcome.status)}});
    }
    extra["harm_sources"] = tiers;
    json expo_tiers = json::array();
    for (const auto& e : report.exposure_estimates) expo_tiers.push_back(e.tier);
    extra["exposure_tiers"] = expo_tiers;
  }
  report.trajectory = annotate(report.merged_harm, report.exposure_outcome, settings.dead_band,
                               extra);

  // --- Caveats.
  report.caveats.push_back(
      "Trend comparison assumes roughly monotonic movement across the two periods; a "
      "spike-and-reversal inside one period is invisible at this resolution.");
  bool any_news = std::any_of(report.harm_evidence.begin(), report.harm_evidence.end(),
                              [](const HarmEvidenceBlock& b) { return b.news_derived; });
  if (any_news) {
    report.caveats.push_back(
        "At least one harm source is a news-derived incident database; the trend is only "
        "meaningful if reporting propensity is roughly stable across the compared periods.");
  }
  if (!options.databases.empty()) {
    report.caveats.push_back(
        "Subject and opportunity are evaluated together as a single subject test; opportunity "
        "is not scored separately.");
    report.caveats.push_back(
        "Period membership uses each record's incident date, not report publication dates.");
  }
  for (const auto& block : report.harm_evidence) {
    if (block.outcome.overspecified()) {
      report.caveats.push_back("Source '" + block.source +
                               "': partial matches outnumber full matches beyond the configured "
                               "ratio; the monitoring question may be overspecified.");
    }
    for (const auto& b : block.bounds) {
      if (bounds_span_two_ooms(b)) {
        report.caveats.push_back(
            "Source '" + block.source + "' period " + b.period.start.iso() + ".." +
            b.period.end.iso() +
            ": harm bounds span more than two orders of magnitude; reported without abstaining.");
      }
    }
  }
  for (const auto& e : report.exposure_estimates) {
    if (e.tier == 4) {
      report.caveats.push_back(
          "Exposure estimate for period " + e.period.start.iso() + ".." + e.period.end.iso() +
          " spans more than two orders of magnitude and was demoted to tier 4 (abstention).");
    }
  }
  if (mq.harm_unit != "incidents") {
    for (const auto& [label, assessments] : art.assessments_by_source) {
      int unbounded_full = 0;
      for (const auto& a : assessments) {
        if (a.s_match.value == Match::True && a.r_match.value == Match::True &&
            !a.harm_lower && !a.harm_upper) {
          unbounded_full += 1;
        }
      }
      if (unbounded_full > 0) {
        report.caveats.push_back(
            "Source '" + label + "': " + std::to_string(unbounded_full) +
            " full match(es) carry no harm bounds and contribute zero to the totals; counts "
            "in '" + mq.harm_unit + "' are never invented.");
      }
    }
  }
  report.caveats.push_back(
      "Tier labels: 1 = copied from an authoritative reporting system (sensitive to that "
      "source), 2 = derived from proxies (sensitive to proxy construction), 3 = expert "
      "elicitation (sensitive to panel selection), 4 = principled abstention.");

  report.run_metadata.timestamp =
      options.normalize_metadata ? "1970-01-01T00:00:00Z" : now_utc_iso();
  report.run_metadata.backend_id = backend_id;
  report.run_metadata.config_digest = detail::fnv1a64_hex(config.raw.dump());
  report.run_metadata.tool_version = kVersion;
  return report;
}

void write_run_outputs(const RunReport& report, const RunArtifacts& artifacts,
                       const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_report_atomically(report, out_dir / "report.json");
  write_text_atomically(report_to_markdown(report), out_dir / "report.md");

  std::ostringstream log;
  artifacts.run_log.write(log);
  write_text_atomically(log.str(), out_dir / "run_log.jsonl");

  for (const auto& [label, assessments] : artifacts.assessments_by_source) {
    std::ostringstream lines;
    for (const auto& a : assessments) lines << assessment_to_json(a).dump() << "\n";
    write_text_atomically(lines.str(), out_dir / ("assessments-" + label + ".jsonl"));
  }
  for (const auto& [label, incidents] : artifacts.incidents_by_source) {
    std::ostringstream lines;
    for (const auto& rec : incidents) lines << incident_to_json(rec).dump() << "\n";
    write_text_atomically(lines.str(), out_dir / ("incidents-" + label + ".jsonl"));
  }
}

AgreementSampleResult agreement_sample_run_dir(const std::filesystem::path& run_dir, int k,
                                               std::uint64_t seed) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(run_dir)) {
    throw FileNotFound("run directory not found: " + run_dir.string());
  }

  std::vector<Assessment> assessments;
  IncidentSet incidents;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(run_dir)) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    const std::string name = path.filename().string();
    if (name.rfind("assessments-", 0) == 0) {
      std::ifstream in(path);
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        assessments.push_back(assessment_from_json(json::parse(line)));
      }
    } else if (name.rfind("incidents-", 0) == 0) {
      std::ifstream in(path);
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        incidents.records.push_back(incident_from_json(json::parse(line)));
      }
    }
  }
  if (assessments.empty()) {
    throw EmptyInput("no assessments-*.jsonl found in " + run_dir.string());
  }

  AgreementSampleResult result;
  result.sample = stratified_sample(assessments, k, seed);
  result.blinded_jsonl = blinded_export_jsonl(result.sample, incidents);
  result.sealed_mapping = sealed_mapping_json(result.sample);
  return result;
}

AgreementReport agreement_score_files(const std::filesystem::path& rater_a,
                                      const std::filesystem::path& rater_b,
                                      const std::filesystem::path& mapping_file) {
  auto read_labels = [](const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFound("rater file not found: " + path.string());
    std::map<std::string, RaterLabels> labels;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      RaterLabels r;
      r.s_match = match_from_string(j.value("s_match", "indeterminate"))
                      .value_or(Match::Indeterminate);
      r.r_match = match_from_string(j.value("r_match", "indeterminate"))
                      .value_or(Match::Indeterminate);
      if (j.contains("harm_lower") && j["harm_lower"].is_number()) {
        r.harm_lower = j["harm_lower"].get<long long>();
      }
      if (j.contains("harm_upper") && j["harm_upper"].is_number()) {
        r.harm_upper = j["harm_upper"].get<long long>();
      }
      labels[j.at("sample_id").get<std::string>()] = r;
    }
    return labels;
  };

  auto a = read_labels(rater_a);
  auto b = read_labels(rater_b);
  if (a.size() != b.size()) {
    throw LengthMismatch("rater files label different sample sizes");
  }

  std::ifstream map_in(mapping_file);
  if (!map_in) throw FileNotFound("sealed mapping not found: " + mapping_file.string());
  json mapping = json::parse(map_in);

  std::map<std::string, Stratum> strata;
  std::vector<LabelPair> pairs;
  for (const auto& item : mapping.at("items")) {
    const std::string sample_id = item.at("sample_id").get<std::string>();
    const std::string incident_id = item.at("incident_id").get<std::string>();
    auto ia = a.find(sample_id);
    auto ib = b.find(sample_id);
    if (ia == a.end() && ib == b.end()) continue;  // item not labelled by either rater
    if (ia == a.end() || ib == b.end()) {
      throw LengthMismatch("sample " + sample_id + " labelled by only one rater");
    }
    LabelPair pair;
    pair.incident_id = incident_id;
    pair.rater_a = ia->second;
    pair.rater_b = ib->second;
    pairs.push_back(pair);
    strata[incident_id] = stratum_from_string(item.at("stratum").get<std::string>());
    a.erase(ia);
    b.erase(ib);
  }
  if (!a.empty() || !b.empty()) {
    throw LengthMismatch("rater files contain sample ids outside the sealed mapping");
  }
  return score_agreement(pairs, strata);
}

}  // namespace trendlens
