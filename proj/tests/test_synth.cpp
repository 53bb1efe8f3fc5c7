#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "trendlens/errors.hpp"
#include "trendlens/synth.hpp"

using namespace trendlens;
using namespace trendlens::synth;
using nlohmann::json;

namespace {

Period year(int y) { return {Date(y, 1, 1), Date(y, 12, 31)}; }

GroundTruthConfig base_config() {
  GroundTruthConfig c;
  c.periods = {year(2024), year(2025)};
  c.exposure = {1000, 2000};
  c.hazard = {0.01, 0.01};
  c.funnel = {FunnelStages{}};
  c.seed = 1;
  return c;
}

GroundTruthConfig load_fixture(const char* name) {
  std::ifstream in(std::filesystem::path(TRENDLENS_FIXTURE_DIR) / name);
  REQUIRE(in.good());
  return ground_truth_from_json(json::parse(in));
}

}  // namespace

TEST_CASE("config validation") {
  GroundTruthConfig c = base_config();
  CHECK_NOTHROW(c.validate());

  SUBCASE("length mismatch") {
    c.exposure = {1000};
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
  }
  SUBCASE("non-positive hazard") {
    c.hazard = {0.01, 0.0};
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
  }
  SUBCASE("stage probability out of range") {
    c.funnel[0].capture = 0.0;
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
    c.funnel[0].capture = 1.5;
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
  }
  SUBCASE("overlapping periods") {
    c.periods[1] = year(2024);
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
  }
  SUBCASE("funnel list must be shared or per period") {
    c.funnel = {FunnelStages{}, FunnelStages{}, FunnelStages{}};
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
  }
}

TEST_CASE("generate is deterministic per seed") {
  GroundTruthConfig c = base_config();
  SyntheticStream a = generate(c);
  SyntheticStream b = generate(c);
  CHECK(a.incidents == b.incidents);
  CHECK(a.realized_counts == b.realized_counts);
  CHECK(a.observed_counts == b.observed_counts);

  c.seed = 2;
  SyntheticStream other = generate(c);
  CHECK(a.incidents != other.incidents);
}

TEST_CASE("no thinning means observed equals realized") {
  GroundTruthConfig c = base_config();  // all stage probabilities 1.0
  SyntheticStream s = generate(c);
  CHECK(s.observed_counts == s.realized_counts);
  CHECK(static_cast<long long>(s.incidents.size()) ==
        s.observed_counts[0] + s.observed_counts[1]);
  for (const auto& rec : s.incidents) {
    CHECK((year(2024).contains(rec.date) || year(2025).contains(rec.date)));
    CHECK(rec.description.find("<<assess s=true r=true") != std::string::npos);
  }
}

TEST_CASE("observed counts never exceed realized counts") {
  GroundTruthConfig c = base_config();
  c.funnel[0] = {0.9, 0.8, 0.7, 0.9, 0.8, 0.9};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    c.seed = seed;
    SyntheticStream s = generate(c);
    for (size_t t = 0; t < s.observed_counts.size(); ++t) {
      CHECK(s.observed_counts[t] <= s.realized_counts[t]);
    }
  }
}

TEST_CASE("observed means track h*E (Monte Carlo over seeds)") {
  GroundTruthConfig c = base_config();
  double sum0 = 0, sum1 = 0;
  const int n = 10000;
  for (int seed = 0; seed < n; ++seed) {
    c.seed = static_cast<std::uint64_t>(seed);
    SyntheticStream s = generate(c);
    sum0 += static_cast<double>(s.observed_counts[0]);
    sum1 += static_cast<double>(s.observed_counts[1]);
  }
  CHECK(sum0 / n == doctest::Approx(10.0).epsilon(0.05));
  CHECK(sum1 / n == doctest::Approx(20.0).epsilon(0.05));
}

TEST_CASE("funnel stages compound multiplicatively") {
  GroundTruthConfig c = base_config();
  c.exposure = {20000, 20000};  // realized mean 200 per period
  c.funnel[0] = {0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
  const double p = c.funnel[0].product();
  CHECK(p == doctest::Approx(0.015625));

  double observed = 0, realized = 0;
  for (int seed = 0; seed < 3000; ++seed) {
    c.seed = static_cast<std::uint64_t>(seed);
    SyntheticStream s = generate(c);
    observed += static_cast<double>(s.observed_counts[0] + s.observed_counts[1]);
    realized += static_cast<double>(s.realized_counts[0] + s.realized_counts[1]);
  }
  CHECK(observed / realized == doctest::Approx(p).epsilon(0.06));
}

TEST_CASE("a period-constant funnel cancels out of the expected growth rate") {
  // True harm means 50 -> 100 (growth +1.0); a constant reporting
  // propensity scales both expectations equally, so the ratio of mean
  // observed counts recovers the true growth.
  GroundTruthConfig c = base_config();
  c.exposure = {5000, 10000};
  c.funnel[0] = {0.8, 0.9, 0.7, 1.0, 0.9, 0.95};
  double sum1 = 0, sum2 = 0;
  for (int seed = 0; seed < 3000; ++seed) {
    c.seed = static_cast<std::uint64_t>(seed);
    SyntheticStream s = generate(c);
    sum1 += static_cast<double>(s.observed_counts[0]);
    sum2 += static_cast<double>(s.observed_counts[1]);
  }
  double observed_growth = sum2 / sum1 - 1.0;
  CHECK(observed_growth == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("reordering stage probabilities with the same product changes nothing") {
  GroundTruthConfig a = base_config();
  a.funnel[0] = {0.9, 0.5, 0.8, 1.0, 0.7, 0.95};
  GroundTruthConfig b = a;
  b.funnel[0] = {0.95, 0.7, 1.0, 0.8, 0.5, 0.9};  // permuted across stages
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    a.seed = b.seed = seed;
    SyntheticStream sa = generate(a);
    SyntheticStream sb = generate(b);
    CHECK(sa.incidents == sb.incidents);
    CHECK(sa.observed_counts == sb.observed_counts);
  }
}

TEST_CASE("noise model flips ground-truth labels") {
  GroundTruthConfig c = base_config();
  c.noise.flip_prob = 1.0;
  SyntheticStream s = generate(c);
  REQUIRE(!s.incidents.empty());
  for (const auto& rec : s.incidents) {
    CHECK(rec.description.find("s=false") != std::string::npos);
  }
}

TEST_CASE("true_category from the configured series") {
  GroundTruthConfig c = base_config();
  SUBCASE("constant hazard with doubling exposure escalates") {
    c.hazard = {0.01, 0.01};
    c.exposure = {1000, 2000};
    CHECK(true_category(c) == Category::Escalating);
  }
  SUBCASE("halving hazard with doubling exposure mitigates") {
    c.hazard = {0.01, 0.005};
    c.exposure = {1000, 2000};
    CHECK(true_category(c) == Category::Mitigating);
  }
  SUBCASE("doubling hazard with halving exposure concentrates") {
    c.hazard = {0.01, 0.02};
    c.exposure = {2000, 1000};
    CHECK(true_category(c) == Category::Concentrating);
  }
  SUBCASE("everything flat recedes") {
    c.hazard = {0.01, 0.01};
    c.exposure = {1000, 1000};
    CHECK(true_category(c) == Category::Receding);
  }
  SUBCASE("wrong period count") {
    c.periods = {year(2024)};
    c.exposure = {1000};
    c.hazard = {0.01};
    CHECK_THROWS_AS(true_category(c), WrongPeriodCount);
  }
}

TEST_CASE("recovery experiment on the stable fixture recovers the truth") {
  GroundTruthConfig c = load_fixture("synth_stable.json");
  PipelineSettings settings;
  RecoveryReport report = recovery_experiment(c, settings, 60);
  CHECK(report.truth == "MITIGATING");
  CHECK(report.recovery_rate >= 0.95);
  CHECK(report.abstention_rate <= 0.05);
  CHECK(report.n_runs == 60);
  CHECK_FALSE(report.config_digest.empty());
}

TEST_CASE("a funnel step with flat true hazard misreports increasing harm") {
  GroundTruthConfig c = load_fixture("synth_step.json");
  PipelineSettings settings;
  RecoveryReport report = recovery_experiment(c, settings, 60);
  CHECK(report.truth == "RECEDING");
  int increasing = 0;
  if (auto it = report.harm_status_counts.find("INCREASING");
      it != report.harm_status_counts.end()) {
    increasing = it->second;
  }
  CHECK(static_cast<double>(increasing) / report.n_runs >= 0.8);
  CHECK(report.recovery_rate <= 0.2);  // the documented failure mode
}

TEST_CASE("sparse streams abstain") {
  GroundTruthConfig c = load_fixture("synth_sparse.json");
  PipelineSettings settings;
  RecoveryReport report = recovery_experiment(c, settings, 60);
  CHECK(report.abstention_rate >= 0.5);
}

TEST_CASE("recovery experiment validates n_runs") {
  CHECK_THROWS_AS(recovery_experiment(base_config(), PipelineSettings{}, 0), InvalidConfig);
}

TEST_CASE("ground truth config JSON round-trip") {
  GroundTruthConfig c = load_fixture("synth_step.json");
  GroundTruthConfig back = ground_truth_from_json(ground_truth_to_json(c));
  CHECK(back.periods.size() == c.periods.size());
  CHECK(back.exposure == c.exposure);
  CHECK(back.hazard == c.hazard);
  CHECK(back.funnel.size() == c.funnel.size());
  CHECK(back.funnel[0].detection == c.funnel[0].detection);
  CHECK(back.seed == c.seed);
}
