#include <algorithm>
#include <map>
#include <random>
#include <set>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "trendlens/agreement.hpp"
#include "trendlens/errors.hpp"

using namespace trendlens;
using nlohmann::json;

namespace {

Assessment labelled(const std::string& id, Match s, Match r) {
  Assessment a;
  a.incident_id = id;
  a.s_match = {s, ""};
  a.r_match = {r, ""};
  a.backend_id = "test";
  return a;
}

std::vector<Assessment> balanced_assessments(int per_stratum) {
  std::vector<Assessment> all;
  for (int i = 0; i < per_stratum; ++i) {
    all.push_back(labelled("full-" + std::to_string(i), Match::True, Match::True));
    all.push_back(labelled("partial-" + std::to_string(i), Match::True, Match::Indeterminate));
    all.push_back(labelled("negative-" + std::to_string(i), Match::False, Match::False));
  }
  return all;
}

LabelPair pair_of(const std::string& id, Match as, Match ar, Match bs, Match br,
                  std::optional<long long> alo = std::nullopt,
                  std::optional<long long> ahi = std::nullopt,
                  std::optional<long long> blo = std::nullopt,
                  std::optional<long long> bhi = std::nullopt) {
  LabelPair p;
  p.incident_id = id;
  p.rater_a = {as, ar, alo, ahi};
  p.rater_b = {bs, br, blo, bhi};
  return p;
}

}  // namespace

TEST_CASE("stratified_sample draws up to k per stratum, reproducibly") {
  auto all = balanced_assessments(10);
  StratifiedSample sample = stratified_sample(all, 5, 42);
  CHECK(sample.items.size() == 15);

  std::map<Stratum, int> counts;
  std::set<std::string> ids;
  for (const auto& item : sample.items) {
    counts[item.stratum] += 1;
    ids.insert(item.incident_id);
  }
  CHECK(counts[Stratum::Full] == 5);
  CHECK(counts[Stratum::Partial] == 5);
  CHECK(counts[Stratum::Negative] == 5);
  CHECK(ids.size() == 15);  // without replacement

  StratifiedSample again = stratified_sample(all, 5, 42);
  REQUIRE(again.items.size() == sample.items.size());
  for (size_t i = 0; i < sample.items.size(); ++i) {
    CHECK(again.items[i].sample_id == sample.items[i].sample_id);
    CHECK(again.items[i].incident_id == sample.items[i].incident_id);
  }
}

TEST_CASE("stratified_sample caps at the stratum size") {
  std::vector<Assessment> all{
      labelled("f1", Match::True, Match::True),
      labelled("f2", Match::True, Match::True),
      labelled("n1", Match::False, Match::False),
  };
  StratifiedSample sample = stratified_sample(all, 5, 1);
  int full = 0;
  for (const auto& item : sample.items) {
    if (item.stratum == Stratum::Full) full += 1;
  }
  CHECK(full == 2);
  CHECK(sample.items.size() == 3);
}

TEST_CASE("different seeds give different but always-valid samples") {
  auto all = balanced_assessments(30);
  StratifiedSample a = stratified_sample(all, 5, 1);
  StratifiedSample b = stratified_sample(all, 5, 2);
  auto id_list = [](const StratifiedSample& s) {
    std::vector<std::string> ids;
    for (const auto& item : s.items) ids.push_back(item.incident_id);
    return ids;
  };
  CHECK(id_list(a) != id_list(b));
  for (const auto& sample : {a, b}) {
    std::map<Stratum, int> counts;
    for (const auto& item : sample.items) counts[item.stratum] += 1;
    CHECK(counts[Stratum::Full] == 5);
    CHECK(counts[Stratum::Partial] == 5);
    CHECK(counts[Stratum::Negative] == 5);
  }
}

TEST_CASE("sampling rejects empty input") {
  CHECK_THROWS_AS(stratified_sample({}, 5, 0), EmptyInput);
}

TEST_CASE("blinded export exposes only the whitelisted fields") {
  auto all = balanced_assessments(4);
  IncidentSet incidents;
  for (const auto& a : all) {
    IncidentRecord rec;
    rec.incident_id = a.incident_id;
    rec.date = Date::parse("2024-06-01");
    rec.title = "Title " + a.incident_id;
    rec.description = "Description " + a.incident_id;
    rec.reports = {{"r", "report text", std::nullopt}};
    incidents.records.push_back(rec);
  }

  StratifiedSample sample = stratified_sample(all, 2, 7);
  std::string exported = blinded_export_jsonl(sample, incidents);
  CHECK(exported == blinded_export_jsonl(sample, incidents));  // byte-reproducible

  std::istringstream lines(exported);
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    json j = json::parse(line);
    std::set<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.insert(k);
    CHECK(keys == std::set<std::string>{"sample_id", "title", "description", "report_excerpt"});
    n += 1;
  }
  CHECK(n == static_cast<int>(sample.items.size()));

  json sealed = sealed_mapping_json(sample);
  CHECK(sealed["items"].size() == sample.items.size());
  CHECK(sealed["seed"] == 7);
}

TEST_CASE("cohen_kappa") {
  const std::vector<std::string> binary{"T", "F"};
  SUBCASE("identical vectors score exactly 1") {
    std::vector<std::string> a{"T", "F", "T", "T", "F"};
    CHECK(cohen_kappa(a, a, binary) == 1.0);
  }
  SUBCASE("hand-computed 2x2 table scores 0.4") {
    std::vector<std::string> a, b;
    auto fill = [&](int n, const char* la, const char* lb) {
      for (int i = 0; i < n; ++i) {
        a.push_back(la);
        b.push_back(lb);
      }
    };
    fill(20, "T", "T");
    fill(5, "T", "F");
    fill(10, "F", "T");
    fill(15, "F", "F");
    CHECK(cohen_kappa(a, b, binary) == doctest::Approx(0.4).epsilon(1e-12));
  }
  SUBCASE("independent raters score near zero (Monte Carlo)") {
    std::mt19937_64 rng(4242);
    const std::vector<std::string> cats{"true", "false", "indeterminate"};
    std::vector<std::string> a, b;
    auto draw = [&]() {
      std::uint64_t v = rng() % 100;
      return v < 50 ? cats[0] : v < 80 ? cats[1] : cats[2];
    };
    for (int i = 0; i < 100000; ++i) {
      a.push_back(draw());
      b.push_back(draw());
    }
    CHECK(std::abs(cohen_kappa(a, b, cats)) < 0.02);
  }
  SUBCASE("kappa is symmetric") {
    std::mt19937_64 rng(9);
    std::vector<std::string> a, b;
    for (int i = 0; i < 500; ++i) {
      a.push_back(rng() % 2 ? "T" : "F");
      b.push_back(rng() % 2 ? "T" : "F");
    }
    CHECK(cohen_kappa(a, b, binary) == doctest::Approx(cohen_kappa(b, a, binary)));
  }
  SUBCASE("kappa is invariant under bijective relabeling") {
    std::mt19937_64 rng(10);
    std::vector<std::string> a, b, ra, rb;
    for (int i = 0; i < 500; ++i) {
      a.push_back(rng() % 2 ? "T" : "F");
      b.push_back(rng() % 2 ? "T" : "F");
    }
    auto relabel = [](const std::vector<std::string>& v) {
      std::vector<std::string> out;
      for (const auto& s : v) out.push_back(s == "T" ? "alpha" : "beta");
      return out;
    };
    ra = relabel(a);
    rb = relabel(b);
    CHECK(cohen_kappa(a, b, binary) ==
          doctest::Approx(cohen_kappa(ra, rb, {"alpha", "beta"})));
  }
  SUBCASE("kappa never exceeds observed agreement") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<std::string> a, b;
      int agree = 0, n = 200;
      for (int i = 0; i < n; ++i) {
        std::string la = rng() % 2 ? "T" : "F";
        std::string lb = rng() % 3 ? la : (la == "T" ? "F" : "T");
        if (la == lb) agree += 1;
        a.push_back(la);
        b.push_back(lb);
      }
      double p_o = static_cast<double>(agree) / n;
      CHECK(cohen_kappa(a, b, binary) <= p_o + 1e-12);
    }
  }
  SUBCASE("degenerate constant raters") {
    std::vector<std::string> a{"T", "T", "T"};
    CHECK(cohen_kappa(a, a, binary) == 1.0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(cohen_kappa({"T"}, {"T", "F"}, binary), LengthMismatch);
    CHECK_THROWS_AS(cohen_kappa({}, {}, binary), LengthMismatch);
    CHECK_THROWS_AS(cohen_kappa({"X"}, {"T"}, binary), UnknownLabel);
  }
}

TEST_CASE("percent_agreement") {
  std::vector<LabelPair> all_same{
      pair_of("a", Match::True, Match::True, Match::True, Match::True),
      pair_of("b", Match::False, Match::False, Match::False, Match::False),
  };
  CHECK(percent_agreement(all_same) == 100.0);

  std::vector<LabelPair> half{
      pair_of("a", Match::True, Match::True, Match::True, Match::True),
      pair_of("b", Match::True, Match::True, Match::False, Match::True),
  };
  CHECK(percent_agreement(half) == 50.0);

  std::vector<LabelPair> three_of_four{
      pair_of("a", Match::True, Match::True, Match::True, Match::True),
      pair_of("b", Match::False, Match::False, Match::False, Match::False),
      pair_of("c", Match::Indeterminate, Match::True, Match::Indeterminate, Match::True),
      pair_of("d", Match::True, Match::Indeterminate, Match::True, Match::False),
  };
  CHECK(percent_agreement(three_of_four) == 75.0);

  CHECK_THROWS_AS(percent_agreement({}), EmptyStratum);
}

TEST_CASE("bound_mae") {
  SUBCASE("identical bounds everywhere give zero error") {
    std::vector<LabelPair> pairs{
        pair_of("a", Match::True, Match::True, Match::True, Match::True, 1, 2, 1, 2),
        pair_of("b", Match::True, Match::True, Match::True, Match::True, 5, 9, 5, 9),
    };
    BoundMae mae = bound_mae(pairs);
    CHECK(mae.mae_lower == 0.0);
    CHECK(mae.mae_upper == 0.0);
    CHECK(mae.included == 2);
  }
  SUBCASE("hand-computed example") {
    std::vector<LabelPair> pairs{
        pair_of("a", Match::True, Match::True, Match::True, Match::True, 1, 10, 2, 11),
        pair_of("b", Match::True, Match::True, Match::True, Match::True, 3, 10, 5, 12),
    };
    BoundMae mae = bound_mae(pairs);
    CHECK(mae.mae_lower == doctest::Approx(1.5));  // (|1-2| + |3-5|) / 2
    CHECK(mae.mae_upper == doctest::Approx(1.5));  // (|10-11| + |10-12|) / 2
  }
  SUBCASE("pairs missing bounds are excluded and counted") {
    std::vector<LabelPair> pairs{
        pair_of("a", Match::True, Match::True, Match::True, Match::True, 1, 2, 1, 2),
        pair_of("b", Match::True, Match::True, Match::True, Match::True, 3, 4),
    };
    BoundMae mae = bound_mae(pairs);
    CHECK(mae.included == 1);
    CHECK(mae.excluded == 1);
  }
  SUBCASE("no comparable pairs is an error") {
    std::vector<LabelPair> pairs{
        pair_of("a", Match::True, Match::True, Match::True, Match::True)};
    CHECK_THROWS_AS(bound_mae(pairs), NoComparablePairs);
  }
}

TEST_CASE("score_agreement assembles the full report") {
  std::vector<LabelPair> pairs{
      pair_of("f1", Match::True, Match::True, Match::True, Match::True, 1, 2, 1, 2),
      pair_of("p1", Match::True, Match::Indeterminate, Match::True, Match::Indeterminate, 3, 4,
              3, 4),
      pair_of("n1", Match::False, Match::False, Match::False, Match::False),
  };
  std::map<std::string, Stratum> strata{
      {"f1", Stratum::Full}, {"p1", Stratum::Partial}, {"n1", Stratum::Negative}};

  AgreementReport report = score_agreement(pairs, strata);
  CHECK(report.kappa_s == 1.0);
  CHECK(report.kappa_r == 1.0);
  CHECK(report.kappa_full == 1.0);
  CHECK(report.n == 3);
  CHECK(report.per_stratum_pct.at("full") == 100.0);
  CHECK(report.per_stratum_pct.at("partial") == 100.0);
  CHECK(report.per_stratum_pct.at("negative") == 100.0);
  CHECK(report.mae_lower == 0.0);
  CHECK(report.bounds_excluded == 1);

  json j = agreement_report_to_json(report);
  CHECK(j["kappa_s"] == 1.0);
  CHECK(j["n"] == 3);
}
