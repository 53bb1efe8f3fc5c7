#include "trendlens/synth.hpp"

#include <cmath>
#include <sstream>

#include "det_rng.hpp"
#include "digest.hpp"
#include "trendlens/assessor.hpp"
#include "trendlens/errors.hpp"
#include "trendlens/exposure.hpp"
#include "trendlens/harm.hpp"

namespace trendlens::synth {

namespace {

using nlohmann::json;

// Portable Poisson sampler driven by DetRng: Knuth's product method for
// moderate means, a rounded normal approximation for large ones. Avoids
// std::poisson_distribution, whose sequences differ across standard
// libraries.
long long sample_poisson(detail::DetRng& rng, double mean) {
  if (mean <= 0) return 0;
  if (mean < 256.0) {
    const double threshold = std::exp(-mean);
    long long count = -1;
    double product = 1.0;
    do {
      product *= rng.unit();
      count += 1;
    } while (product > threshold);
    return count;
  }
  // Box-Muller normal approximation.
  double u1 = rng.unit();
  double u2 = rng.unit();
  while (u1 <= 0) u1 = rng.unit();
  double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  long long n = std::llround(mean + std::sqrt(mean) * z);
  return n < 0 ? 0 : n;
}

std::string marker_for(Match s, Match r) {
  return "<<assess s=" + to_string(s) + " r=" + to_string(r) +
         (s == Match::True && r == Match::True ? " lower=1 upper=1" : "") + ">>";
}

Match apply_noise(detail::DetRng& rng, const NoiseModel& noise) {
  double u = rng.unit();
  if (u < noise.flip_prob) return Match::False;
  if (u < noise.flip_prob + noise.indeterminate_prob) return Match::Indeterminate;
  return Match::True;
}

int sign_of(double before, double after) {
  if (after > before) return 1;
  if (after < before) return -1;
  return 0;
}

}  // namespace

void GroundTruthConfig::validate() const {
  if (periods.empty()) throw InvalidConfig("at least one period required");
  if (exposure.size() != periods.size() || hazard.size() != periods.size()) {
    throw InvalidConfig("exposure and hazard series must match the period count");
  }
  if (funnel.size() != 1 && funnel.size() != periods.size()) {
    throw InvalidConfig("funnel stages must be shared or given per period");
  }
  for (double e : exposure) {
    if (!(e > 0)) throw InvalidConfig("exposure values must be positive");
  }
  for (double h : hazard) {
    if (!(h > 0)) throw InvalidConfig("hazard values must be positive");
  }
  for (const auto& f : funnel) {
    for (double p : {f.detection, f.attribution, f.recording, f.disclosure, f.capture, f.scope}) {
      if (!(p > 0) || p > 1) throw InvalidConfig("funnel stage probabilities must be in (0, 1]");
    }
  }
  for (size_t i = 1; i < periods.size(); ++i) {
    if (!(periods[i - 1].end < periods[i].start)) {
      throw InvalidConfig("periods must be chronologically ordered and non-overlapping");
    }
  }
  if (noise.flip_prob < 0 || noise.indeterminate_prob < 0 ||
      noise.flip_prob + noise.indeterminate_prob > 1) {
    throw InvalidConfig("noise probabilities must be non-negative and sum to at most 1");
  }
}

SyntheticStream generate(const GroundTruthConfig& config) {
  config.validate();
  detail::DetRng rng(config.seed);
  SyntheticStream stream;

  for (size_t t = 0; t < config.periods.size(); ++t) {
    const Period& period = config.periods[t];
    const double mean = config.hazard[t] * config.exposure[t];
    const double p = config.funnel_for(t).product();

    long long realized = sample_poisson(rng, mean);
    long long observed = 0;
    const std::int64_t span_days = period.end.serial() - period.start.serial() + 1;

    for (long long i = 0; i < realized; ++i) {
      if (rng.unit() >= p) continue;  // lost somewhere in the funnel
      observed += 1;

      IncidentRecord rec;
      rec.source = Source::CANONICAL;
      {
        std::ostringstream id;
        id << "syn-" << t << "-" << i;
        rec.incident_id = id.str();
      }
      rec.date = period.start.plus_days(static_cast<std::int64_t>(
          rng.below(static_cast<std::uint64_t>(span_days))));
      rec.title = "Synthetic harm event " + rec.incident_id;

      Match s = Match::True, r = Match::True;
      if (config.noise.flip_prob > 0 || config.noise.indeterminate_prob > 0) {
        s = apply_noise(rng, config.noise);
        r = apply_noise(rng, config.noise);
      }
      rec.description =
          "Simulated harm event that passed the reporting funnel. " + marker_for(s, r);
      stream.incidents.push_back(std::move(rec));
    }

    stream.expected_counts.push_back(mean);
    stream.realized_counts.push_back(realized);
    stream.observed_counts.push_back(observed);
  }
  return stream;
}

Category true_category(const GroundTruthConfig& config, double dead_band) {
  config.validate();
  if (config.periods.size() != 2) {
    throw WrongPeriodCount("true_category requires exactly two periods");
  }
  const double e1 = config.exposure[0], e2 = config.exposure[1];
  const double h1 = config.hazard[0] * e1, h2 = config.hazard[1] * e2;

  int e_sign = sign_of(e1, e2);
  Direction e_dir = e_sign > 0 ? Direction::Up : e_sign < 0 ? Direction::Down : Direction::Flat;

  double growth_e = (e2 - e1) / e1;
  double growth_h = (h2 - h1) / h1;
  double d = growth_h - growth_e;
  Direction hhat = d > dead_band ? Direction::Up : d < -dead_band ? Direction::Down
                                                                  : Direction::Flat;
  return classify_directions(e_dir, hhat);
}

RecoveryReport recovery_experiment(const GroundTruthConfig& config,
                                   const PipelineSettings& settings, int n_runs) {
  config.validate();
  if (n_runs < 1) throw InvalidConfig("n_runs must be >= 1");
  if (config.periods.size() != 2) {
    throw WrongPeriodCount("recovery_experiment requires exactly two periods");
  }

  const Category truth = true_category(config, settings.dead_band);

  MonitoringQuestion mq;
  mq.id = "synthetic-recovery";
  mq.subject = "synthetic subjects";
  mq.opportunity = "exposed to the simulated hazard";
  mq.risk_event = "simulated harm events";
  mq.timeframe.explicit_periods = {config.periods[0], config.periods[1]};
  mq.timeframe_text = "simulated period";
  mq.harm_unit = "incidents";

  StubBackend backend;
  RetryPolicy policy;

  RecoveryReport report;
  report.truth = to_string(truth);
  report.config_digest = detail::fnv1a64_hex(ground_truth_to_json(config).dump());
  report.n_runs = n_runs;

  int recovered = 0, abstained = 0;
  for (int run = 0; run < n_runs; ++run) {
    GroundTruthConfig run_config = config;
    run_config.seed = config.seed + static_cast<std::uint64_t>(run);
    SyntheticStream stream = generate(run_config);

    // Assess everything once; split into periods by record date.
    std::vector<Assessment> per_period[2];
    for (const auto& rec : stream.incidents) {
      Assessment a = assess_incident(backend, mq, rec, policy);
      size_t t = config.periods[0].contains(rec.date) ? 0 : 1;
      per_period[t].push_back(std::move(a));
    }

    HarmBounds b1 = harm_bounds(partition(per_period[0]), config.periods[0], mq.harm_unit, 2,
                                settings.min_full);
    HarmBounds b2 = harm_bounds(partition(per_period[1]), config.periods[1], mq.harm_unit, 2,
                                settings.min_full);
    HarmTrendOutcome harm = harm_trend(b1, b2, settings.min_full, settings.overspec_ratio);

    // Ground-truth exposure as a tier-1 reading.
    ExposureEstimate x1, x2;
    x1.period = config.periods[0];
    x1.point = x1.low = x1.high = config.exposure[0];
    x1.oom = oom(x1.point);
    x1.tier = 1;
    x1.confidence = Confidence::High;
    x2.period = config.periods[1];
    x2.point = x2.low = x2.high = config.exposure[1];
    x2.oom = oom(x2.point);
    x2.tier = 1;
    x2.confidence = Confidence::High;
    ExposureTrendOutcome expo = exposure_trend(x1, x2);

    TrajectoryResult result = annotate(harm, expo, settings.dead_band);

    const std::string predicted = to_string(result.category);
    report.confusion[report.truth][predicted] += 1;
    report.harm_status_counts[to_string(harm.status)] += 1;
    if (result.category == truth) recovered += 1;
    if (result.category == Category::Unclassifiable) abstained += 1;
  }

  report.recovery_rate = static_cast<double>(recovered) / n_runs;
  report.abstention_rate = static_cast<double>(abstained) / n_runs;
  return report;
}

GroundTruthConfig ground_truth_from_json(const json& j) {
  GroundTruthConfig c;
  for (const auto& p : j.at("periods")) c.periods.push_back(period_from_json(p));
  c.exposure = j.at("exposure_per_period").get<std::vector<double>>();
  c.hazard = j.at("hazard_per_exposure").get<std::vector<double>>();

  auto stages_from = [](const json& f) {
    FunnelStages s;
    s.detection = f.value("detection", 1.0);
    s.attribution = f.value("attribution", 1.0);
    s.recording = f.value("recording", 1.0);
    s.disclosure = f.value("disclosure", 1.0);
    s.capture = f.value("capture", 1.0);
    s.scope = f.value("scope", 1.0);
    return s;
  };
  const json& f = j.at("funnel_stages");
  if (f.is_array()) {
    for (const auto& stage : f) c.funnel.push_back(stages_from(stage));
  } else {
    c.funnel.push_back(stages_from(f));
  }

  c.seed = j.value("seed", 0ull);
  if (j.contains("noise")) {
    c.noise.flip_prob = j["noise"].value("flip_prob", 0.0);
    c.noise.indeterminate_prob = j["noise"].value("indeterminate_prob", 0.0);
  }
  c.validate();
  return c;
}

json ground_truth_to_json(const GroundTruthConfig& c) {
  json periods = json::array();
  for (const auto& p : c.periods) periods.push_back(period_to_json(p));
  auto stage_json = [](const FunnelStages& s) {
    return json{{"detection", s.detection}, {"attribution", s.attribution},
                {"recording", s.recording}, {"disclosure", s.disclosure},
                {"capture", s.capture},     {"scope", s.scope}};
  };
  json funnel;
  if (c.funnel.size() == 1) {
    funnel = stage_json(c.funnel.front());
  } else {
    funnel = json::array();
    for (const auto& f : c.funnel) funnel.push_back(stage_json(f));
  }
  json j{{"periods", periods},
         {"exposure_per_period", c.exposure},
         {"hazard_per_exposure", c.hazard},
         {"funnel_stages", funnel},
         {"seed", c.seed}};
  if (c.noise.flip_prob > 0 || c.noise.indeterminate_prob > 0) {
    j["noise"] = json{{"flip_prob", c.noise.flip_prob},
                      {"indeterminate_prob", c.noise.indeterminate_prob}};
  }
  return j;
}

json recovery_report_to_json(const RecoveryReport& r) {
  json confusion = json::object();
  for (const auto& [truth, row] : r.confusion) {
    json jrow = json::object();
    for (const auto& [predicted, count] : row) jrow[predicted] = count;
    confusion[truth] = jrow;
  }
  json harm_counts = json::object();
  for (const auto& [status, count] : r.harm_status_counts) harm_counts[status] = count;
  return json{{"config_digest", r.config_digest},
              {"true_category", r.truth},
              {"n_runs", r.n_runs},
              {"recovery_rate", r.recovery_rate},
              {"abstention_rate", r.abstention_rate},
              {"confusion", confusion},
              {"harm_status_counts", harm_counts}};
}

}  // namespace trendlens::synth
