// trendlens CLI: validate/author monitoring questions, run the estimation
// pipeline over incident databases, score inter-assessor agreement, drive
// the synthetic surveillance simulator, and maintain the answered-question
// registry.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "trendlens/errors.hpp"
#include "trendlens/pipeline.hpp"
#include "trendlens/registry.hpp"
#include "trendlens/synth.hpp"
#include "trendlens/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace trendlens;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitInput = 2;
constexpr int kExitStage = 3;

Period parse_period_arg(const std::string& text) {
  size_t sep = text.find("..");
  if (sep == std::string::npos) {
    throw MalformedConfig("period must look like YYYY-MM-DD..YYYY-MM-DD: " + text);
  }
  return Period{Date::parse(text.substr(0, sep)), Date::parse(text.substr(sep + 2))};
}

std::vector<DatabaseInput> pair_databases(const std::vector<std::string>& paths,
                                          const std::vector<std::string>& formats) {
  std::vector<DatabaseInput> out;
  if (!formats.empty() && formats.size() != 1 && formats.size() != paths.size()) {
    throw Error("--format must be given once (applies to all databases) or once per --database");
  }
  for (size_t i = 0; i < paths.size(); ++i) {
    std::string format = "canonical";
    if (formats.size() == 1) format = formats.front();
    if (formats.size() == paths.size()) format = formats[i];
    out.push_back({fs::path(paths[i]), format});
  }
  return out;
}

int classify_exit(const std::exception& e) {
  if (dynamic_cast<const MissingField*>(&e) || dynamic_cast<const InvalidPeriodSpec*>(&e) ||
      dynamic_cast<const Aborted*>(&e) || dynamic_cast<const InsufficientHistory*>(&e)) {
    return kExitValidation;
  }
  if (dynamic_cast<const MalformedConfig*>(&e) || dynamic_cast<const FileNotFound*>(&e) ||
      dynamic_cast<const SchemaMismatch*>(&e) || dynamic_cast<const EmptySnapshot*>(&e) ||
      dynamic_cast<const UnknownMq*>(&e) || dynamic_cast<const SingleEntry*>(&e) ||
      dynamic_cast<const DuplicateEntry*>(&e) || dynamic_cast<const InvalidConfig*>(&e) ||
      dynamic_cast<const WrongPeriodCount*>(&e) || dynamic_cast<const ConfigError*>(&e) ||
      dynamic_cast<const EmptyInput*>(&e) || dynamic_cast<const LengthMismatch*>(&e)) {
    return kExitInput;
  }
  return kExitStage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trendlens: trajectory classification for AI incident monitoring questions"};
  app.set_version_flag("--version", std::string("trendlens ") + kVersion);
  app.require_subcommand(1);

  // ---- validate ----
  std::string validate_config;
  auto* cmd_validate = app.add_subcommand("validate", "Validate a monitoring question config");
  cmd_validate->add_option("config", validate_config, "Path to the MQ config JSON")->required();

  // ---- wizard ----
  std::string wizard_out;
  auto* cmd_wizard =
      app.add_subcommand("wizard", "Interactively author a monitoring question config");
  cmd_wizard->add_option("--out", wizard_out, "Where to write the config (default <id>.json)");

  // ---- run ----
  std::string run_config_path, run_backend = "stub", run_model, run_frequency, run_out = "trendlens-out";
  std::vector<std::string> run_databases, run_formats, run_periods;
  std::string run_date_str, elicitation_path, exposure_file;
  int run_buffer_months = -1, run_min_full = 3, run_concurrency = 4;
  double run_dead_band = 0.10, run_overspec = 5.0;
  bool run_include_reports = false, run_normalize = false;
  auto* cmd_run = app.add_subcommand("run", "Answer a monitoring question from incident databases");
  cmd_run->add_option("config", run_config_path, "MQ config JSON")->required();
  cmd_run->add_option("--database", run_databases, "Incident database path (repeatable)");
  cmd_run->add_option("--format", run_formats,
                      "Database format aiid|oecd|canonical (one for all, or one per database)");
  cmd_run->add_option("--backend", run_backend, "Assessor backend: stub|remote");
  cmd_run->add_option("--model", run_model, "Remote model name");
  cmd_run->add_option("--periods", run_periods,
                      "Two explicit periods YYYY-MM-DD..YYYY-MM-DD (overrides the config)");
  cmd_run->add_option("--frequency", run_frequency, "Cadence yearly|quarterly|monthly (override)");
  cmd_run->add_option("--buffer-months", run_buffer_months, "Reporting buffer override");
  cmd_run->add_option("--run-date", run_date_str, "Run date (default: today)");
  cmd_run->add_option("--min-full", run_min_full, "Abstention threshold on full matches");
  cmd_run->add_option("--dead-band", run_dead_band, "Flat band on growth-rate difference");
  cmd_run->add_option("--overspec-ratio", run_overspec, "Partial/full overspecification ratio");
  cmd_run->add_option("--elicitation", elicitation_path, "Expert elicitation record JSON");
  cmd_run->add_option("--exposure-estimates", exposure_file,
                      "Manually authored exposure estimates JSON");
  cmd_run->add_option("--concurrency", run_concurrency, "Max in-flight assessor calls");
  cmd_run->add_flag("--include-reports", run_include_reports,
                    "Attach the first non-empty linked report to each prompt");
  cmd_run->add_flag("--normalize-metadata", run_normalize,
                    "Deterministic timestamps (for byte-identical comparisons)");
  cmd_run->add_option("--out", run_out, "Output directory");

  // ---- agreement ----
  auto* cmd_agreement = app.add_subcommand("agreement", "Inter-assessor agreement tooling");
  cmd_agreement->require_subcommand(1);
  std::string agr_run_dir, agr_out = "agreement-out";
  int agr_k = 5;
  std::uint64_t agr_seed = 0;
  auto* cmd_sample = cmd_agreement->add_subcommand(
      "sample", "Draw a blinded, stratified rater sample from a run directory");
  cmd_sample->add_option("run_dir", agr_run_dir, "Completed run directory")->required();
  cmd_sample->add_option("--k", agr_k, "Max items per stratum");
  cmd_sample->add_option("--seed", agr_seed, "Sampling seed");
  cmd_sample->add_option("--out", agr_out, "Output directory");

  std::string score_a, score_b, score_mapping, score_out;
  auto* cmd_score =
      cmd_agreement->add_subcommand("score", "Score two rater files against a sealed mapping");
  cmd_score->add_option("--rater-a", score_a, "Rater A labels (JSON-lines)")->required();
  cmd_score->add_option("--rater-b", score_b, "Rater B labels (JSON-lines)")->required();
  cmd_score->add_option("--mapping", score_mapping, "Sealed mapping JSON")->required();
  cmd_score->add_option("--out", score_out, "Write the agreement report here too");

  // ---- synth ----
  std::string synth_config_path, synth_out;
  int synth_runs = 0;
  double synth_dead_band = 0.10, synth_overspec = 5.0;
  int synth_min_full = 3;
  std::int64_t synth_seed = -1;
  auto* cmd_synth =
      app.add_subcommand("synth", "Run recovery experiments on a synthetic reporting funnel");
  cmd_synth->add_option("config", synth_config_path, "Ground-truth config JSON")->required();
  cmd_synth->add_option("--runs", synth_runs, "Number of seeded runs")->required();
  cmd_synth->add_option("--seed", synth_seed, "Override the config's base seed");
  cmd_synth->add_option("--min-full", synth_min_full, "Abstention threshold");
  cmd_synth->add_option("--dead-band", synth_dead_band, "Flat band");
  cmd_synth->add_option("--overspec-ratio", synth_overspec, "Overspecification ratio");
  cmd_synth->add_option("--out", synth_out, "Write the recovery report here too");

  // ---- registry ----
  auto* cmd_registry = app.add_subcommand("registry", "Answered-question registry");
  cmd_registry->require_subcommand(1);
  std::string reg_dir = "registry";
  cmd_registry->add_option("--dir", reg_dir, "Registry directory")->envname("TRENDLENS_REGISTRY");

  std::string reg_add_report, reg_add_id, reg_add_status = "PUBLISHED", reg_add_supersedes;
  auto* cmd_reg_add = cmd_registry->add_subcommand("add", "Add a run report to the registry");
  cmd_reg_add->add_option("report", reg_add_report, "report.json from a run")->required();
  cmd_reg_add->add_option("--id", reg_add_id, "Entry id (default <mq_id>-<seq>)");
  cmd_reg_add->add_option("--status", reg_add_status, "DRAFT or PUBLISHED");
  cmd_reg_add->add_option("--supersedes", reg_add_supersedes, "Entry id this one supersedes");

  std::string reg_diff_mq;
  auto* cmd_reg_diff =
      cmd_registry->add_subcommand("diff", "Transition between the two latest published entries");
  cmd_reg_diff->add_option("mq_id", reg_diff_mq, "Monitoring question id")->required();

  auto* cmd_reg_list = cmd_registry->add_subcommand("list", "List registry entries");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_validate->parsed()) {
      std::ifstream in(validate_config);
      if (!in) throw FileNotFound("config not found: " + validate_config);
      std::ostringstream buf;
      buf << in.rdbuf();
      MonitoringQuestion mq = parse_mq(buf.str());
      std::cout << mq.render() << "\n";
      std::cout << "id: " << mq.id << ", harm unit: " << mq.harm_unit << "\n";
      return kExitOk;
    }

    if (cmd_wizard->parsed()) {
      MonitoringQuestion mq = wizard(std::cin, std::cout);
      fs::path out = wizard_out.empty() ? fs::path(mq.id + ".json") : fs::path(wizard_out);
      write_text_atomically(serialize_mq(mq), out);
      std::cout << "Wrote " << out.string() << "\n";
      return kExitOk;
    }

    if (cmd_run->parsed()) {
      if (run_databases.empty()) {
        std::cerr << "error: run requires at least one --database\n";
        return kExitInput;
      }
      RunConfig config = load_run_config(run_config_path);
      if (!run_periods.empty()) {
        if (run_periods.size() != 2) throw InvalidPeriodSpec("--periods needs exactly two values");
        std::pair<Period, Period> periods{parse_period_arg(run_periods[0]),
                                          parse_period_arg(run_periods[1])};
        config.mq.timeframe.explicit_periods = periods;
        config.mq.timeframe.frequency.reset();
      }
      if (!run_frequency.empty()) {
        config.mq.timeframe.frequency = frequency_from_string(run_frequency);
        config.mq.timeframe.explicit_periods.reset();
      }
      if (run_buffer_months >= 0) config.mq.timeframe.buffer_months = run_buffer_months;

      RunOptions options;
      options.databases = pair_databases(run_databases, run_formats);
      options.backend_kind = run_backend;
      if (!run_model.empty()) options.remote.model = run_model;
      if (!run_date_str.empty()) options.run_date = Date::parse(run_date_str);
      options.settings.min_full = run_min_full;
      options.settings.dead_band = run_dead_band;
      options.settings.overspec_ratio = run_overspec;
      options.include_report_text = run_include_reports;
      options.normalize_metadata = run_normalize;
      options.concurrency = run_concurrency;
      if (!elicitation_path.empty()) options.elicitation_file = fs::path(elicitation_path);
      if (!exposure_file.empty()) options.exposure_estimates_file = fs::path(exposure_file);

      RunArtifacts artifacts;
      RunReport report = execute_run(config, options, &artifacts);
      write_run_outputs(report, artifacts, run_out);

      std::cout << "Classification: " << to_string(report.trajectory.category) << "  [E "
                << to_string(report.trajectory.e_direction) << ", H^ "
                << to_string(report.trajectory.hhat_direction) << "]\n";
      if (report.trajectory.absolute_harm_warning) {
        std::cout << "Warning: absolute harm may still be rising.\n";
      }
      std::cout << "Report written to " << (fs::path(run_out) / "report.json").string() << "\n";
      return kExitOk;
    }

    if (cmd_sample->parsed()) {
      AgreementSampleResult result = agreement_sample_run_dir(agr_run_dir, agr_k, agr_seed);
      fs::create_directories(agr_out);
      write_text_atomically(result.blinded_jsonl, fs::path(agr_out) / "blinded.jsonl");
      write_text_atomically(result.sealed_mapping.dump(2) + "\n",
                            fs::path(agr_out) / "sealed_mapping.json");
      std::cout << "Sampled " << result.sample.items.size() << " incidents into " << agr_out
                << " (seed " << agr_seed << ", k " << agr_k << ")\n";
      return kExitOk;
    }

    if (cmd_score->parsed()) {
      AgreementReport report = agreement_score_files(score_a, score_b, score_mapping);
      json doc = agreement_report_to_json(report);
      std::cout << doc.dump(2) << "\n";
      if (!score_out.empty()) write_text_atomically(doc.dump(2) + "\n", score_out);
      return kExitOk;
    }

    if (cmd_synth->parsed()) {
      if (synth_runs < 1) {
        std::cerr << "error: --runs must be >= 1\n";
        return kExitInput;
      }
      std::ifstream in(synth_config_path);
      if (!in) throw FileNotFound("synth config not found: " + synth_config_path);
      synth::GroundTruthConfig config = synth::ground_truth_from_json(json::parse(in));
      if (synth_seed >= 0) config.seed = static_cast<std::uint64_t>(synth_seed);
      PipelineSettings settings;
      settings.min_full = synth_min_full;
      settings.dead_band = synth_dead_band;
      settings.overspec_ratio = synth_overspec;
      synth::RecoveryReport report = synth::recovery_experiment(config, settings, synth_runs);
      json doc = synth::recovery_report_to_json(report);
      std::cout << doc.dump(2) << "\n";
      std::cout << "true category " << report.truth << ": recovery "
                << report.recovery_rate * 100 << "%, abstention " << report.abstention_rate * 100
                << "%\n";
      for (const auto& [truth, row] : report.confusion) {
        for (const auto& [predicted, count] : row) {
          std::cout << "  " << truth << " -> " << predicted << ": " << count << "\n";
        }
      }
      if (!synth_out.empty()) write_text_atomically(doc.dump(2) + "\n", synth_out);
      return kExitOk;
    }

    if (cmd_reg_add->parsed()) {
      std::ifstream in(reg_add_report);
      if (!in) throw FileNotFound("report not found: " + reg_add_report);
      Registry registry((fs::path(reg_dir)));
      std::optional<std::string> supersedes;
      if (!reg_add_supersedes.empty()) supersedes = reg_add_supersedes;
      std::string id = registry.add(json::parse(in), reg_add_id, reg_add_status, supersedes);
      std::cout << "Registered entry " << id << "\n";
      return kExitOk;
    }

    if (cmd_reg_diff->parsed()) {
      Registry registry((fs::path(reg_dir)));
      TransitionLabel label = registry.diff(reg_diff_mq);
      std::cout << to_string(label.from) << " -> " << to_string(label.to) << "\n"
                << label.interpretation_key << ": " << label.text << "\n";
      return kExitOk;
    }

    if (cmd_reg_list->parsed()) {
      Registry registry((fs::path(reg_dir)));
      for (const auto& entry : registry.list()) {
        std::cout << entry.entry_id << "  " << entry.mq_id << "  " << entry.status << "  "
                  << entry.category << "  " << entry.added_at << "\n";
      }
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return classify_exit(e);
  }
  return kExitOk;
}
