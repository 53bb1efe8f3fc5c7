#include <algorithm>
#include <random>
#include <tuple>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "trendlens/assessor.hpp"
#include "trendlens/errors.hpp"
#include "trendlens/mq.hpp"

using namespace trendlens;
using nlohmann::json;

namespace {

MonitoringQuestion figure_mq() {
  return parse_mq(R"({
    "subject": "Registered AV-capable vehicles",
    "opportunity": "Operating in self-driving mode on public roads",
    "risk_event": "Cause injury or loss of life",
    "timeframe": "Per million vehicle-miles"
  })");
}

IncidentRecord minimal_record() {
  IncidentRecord rec;
  rec.incident_id = "i1";
  rec.date = Date::parse("2024-06-01");
  rec.title = "A self-driving shuttle hit a bollard";
  rec.description = "The shuttle was operating autonomously.";
  return rec;
}

// Backend that replays a fixed sequence of replies.
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(std::vector<BackendReply> replies)
      : replies_(std::move(replies)) {}
  BackendReply complete(const PromptPayload&) override {
    calls += 1;
    if (next_ < replies_.size()) return replies_[next_++];
    return replies_.back();
  }
  std::string id() const override { return "scripted"; }
  int calls = 0;

 private:
  std::vector<BackendReply> replies_;
  size_t next_ = 0;
};

const char* kGoodReply =
    R"({"s_match":"true","s_reasoning":"subject fits","r_match":"indeterminate",
        "r_reasoning":"unclear","harm_lower":1,"harm_upper":3,
        "harm_reasoning":"one crash","suggested_proxy":"crash filings"})";

}  // namespace

TEST_CASE("build_prompt embeds the SORT fields and response schema") {
  MonitoringQuestion mq = figure_mq();
  AssessmentContext ctx = attach_context(minimal_record(), false);
  PromptPayload payload = build_prompt(mq, ctx);

  for (const char* required :
       {"Registered AV-capable vehicles", "Operating in self-driving mode on public roads",
        "Cause injury or loss of life", "Per million vehicle-miles"}) {
    CHECK(payload.user.find(required) != std::string::npos);
  }
  for (const char* key : {"s_match", "s_reasoning", "r_match", "r_reasoning", "harm_lower",
                          "harm_upper", "harm_reasoning", "suggested_proxy"}) {
    CHECK(payload.user.find(key) != std::string::npos);
  }
  CHECK(payload.user.find("indeterminate\" over \"false") != std::string::npos);
}

TEST_CASE("build_prompt places the report excerpt after the metadata") {
  IncidentRecord rec = minimal_record();
  rec.reports = {{"r1", "An excerpt about the shuttle.", std::nullopt}};
  PromptPayload payload = build_prompt(figure_mq(), attach_context(rec, true));
  size_t meta = payload.user.find("Alleged harmed parties");
  size_t excerpt = payload.user.find("An excerpt about the shuttle.");
  REQUIRE(meta != std::string::npos);
  REQUIRE(excerpt != std::string::npos);
  CHECK(excerpt > meta);
}

TEST_CASE("build_prompt is deterministic") {
  PromptPayload a = build_prompt(figure_mq(), attach_context(minimal_record(), false));
  PromptPayload b = build_prompt(figure_mq(), attach_context(minimal_record(), false));
  CHECK(a == b);
}

TEST_CASE("parse_assessment maps a well-formed reply directly") {
  Assessment a = parse_assessment(kGoodReply, "i1", "b1");
  CHECK(a.incident_id == "i1");
  CHECK(a.backend_id == "b1");
  CHECK(a.s_match.value == Match::True);
  CHECK(a.s_match.reasoning == "subject fits");
  CHECK(a.r_match.value == Match::Indeterminate);
  CHECK(a.harm_lower == 1);
  CHECK(a.harm_upper == 3);
  CHECK(a.suggested_proxy == "crash filings");
}

TEST_CASE("parse_assessment policy mappings") {
  SUBCASE("unknown match strings become indeterminate/unparseable") {
    Assessment a = parse_assessment(R"({"s_match":"maybe","r_match":"true"})", "i", "b");
    CHECK(a.s_match.value == Match::Indeterminate);
    CHECK(a.s_match.reasoning == "unparseable");
    CHECK(a.r_match.value == Match::True);
  }
  SUBCASE("missing keys become indeterminate/unparseable") {
    Assessment a = parse_assessment(R"({"harm_lower":2})", "i", "b");
    CHECK(a.s_match.value == Match::Indeterminate);
    CHECK(a.r_match.reasoning == "unparseable");
  }
  SUBCASE("swapped bounds are normalised and flagged") {
    Assessment a =
        parse_assessment(R"({"s_match":"true","r_match":"true","harm_lower":5,"harm_upper":2})",
                         "i", "b");
    CHECK(a.harm_lower == 2);
    CHECK(a.harm_upper == 5);
    CHECK(a.harm_reasoning.find("swapped") != std::string::npos);
  }
  SUBCASE("negative or fractional bounds are dropped") {
    Assessment a = parse_assessment(
        R"({"s_match":"true","r_match":"true","harm_lower":-3,"harm_upper":2.5})", "i", "b");
    CHECK_FALSE(a.harm_lower.has_value());
    CHECK_FALSE(a.harm_upper.has_value());
  }
  SUBCASE("integral floats are accepted") {
    Assessment a = parse_assessment(
        R"({"s_match":"true","r_match":"true","harm_lower":2.0,"harm_upper":4.0})", "i", "b");
    CHECK(a.harm_lower == 2);
    CHECK(a.harm_upper == 4);
  }
  SUBCASE("unknown extra keys are ignored") {
    Assessment a = parse_assessment(
        R"({"s_match":"false","r_match":"false","confidence":"high","foo":[1,2]})", "i", "b");
    CHECK(a.s_match.value == Match::False);
  }
  SUBCASE("non-JSON raises NotJson") {
    CHECK_THROWS_AS(parse_assessment("I think it matches", "i", "b"), NotJson);
    CHECK_THROWS_AS(parse_assessment("[1,2]", "i", "b"), NotJson);
  }
}

TEST_CASE("parse_assessment never yields lower > upper") {
  std::mt19937 rng(21);
  for (int i = 0; i < 300; ++i) {
    long long lo = static_cast<long long>(rng() % 100);
    long long hi = static_cast<long long>(rng() % 100);
    json doc{{"s_match", "true"}, {"r_match", "true"}, {"harm_lower", lo}, {"harm_upper", hi}};
    Assessment a = parse_assessment(doc.dump(), "i", "b");
    REQUIRE(a.harm_lower.has_value());
    REQUIRE(a.harm_upper.has_value());
    CHECK(*a.harm_lower <= *a.harm_upper);
  }
}

TEST_CASE("assess_incident retry behaviour") {
  MonitoringQuestion mq = figure_mq();
  IncidentRecord rec = minimal_record();
  RetryPolicy policy;
  policy.max_attempts = 3;
  policy.base_delay = std::chrono::milliseconds(100);
  policy.rate_limit_multiplier = 4.0;

  std::vector<std::chrono::milliseconds> sleeps;
  AssessOptions options;
  options.sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d); };

  SUBCASE("three transport failures exhaust retries") {
    ScriptedBackend backend({{BackendReply::Status::TransportError, "", "down"}});
    RunLog log;
    options.run_log = &log;
    Assessment a = assess_incident(backend, mq, rec, policy, options);
    CHECK(backend.calls == 3);
    CHECK(a.s_match.value == Match::Indeterminate);
    CHECK(a.r_match.value == Match::Indeterminate);
    CHECK_FALSE(a.harm_lower.has_value());
    CHECK_FALSE(a.harm_upper.has_value());
    REQUIRE(log.entries().size() == 1);
    CHECK(log.entries()[0]["outcome"] == "exhausted");
    CHECK(log.entries()[0]["attempts"] == 3);
  }
  SUBCASE("success on the second attempt") {
    ScriptedBackend backend({{BackendReply::Status::TransportError, "", "down"},
                             {BackendReply::Status::Ok, kGoodReply, ""}});
    RunLog log;
    options.run_log = &log;
    Assessment a = assess_incident(backend, mq, rec, policy, options);
    CHECK(a.s_match.value == Match::True);
    REQUIRE(log.entries().size() == 1);
    CHECK(log.entries()[0]["attempts"] == 2);
    CHECK(log.entries()[0]["outcome"] == "ok");
    REQUIRE(sleeps.size() == 1);
    CHECK(sleeps[0] == std::chrono::milliseconds(100));
  }
  SUBCASE("rate limits wait at least base_delay times the multiplier") {
    ScriptedBackend backend({{BackendReply::Status::RateLimited, "", "429"},
                             {BackendReply::Status::Ok, kGoodReply, ""}});
    Assessment a = assess_incident(backend, mq, rec, policy, options);
    CHECK(a.s_match.value == Match::True);
    REQUIRE(sleeps.size() == 1);
    CHECK(sleeps[0] >= std::chrono::milliseconds(400));  // base 100 * multiplier 4
  }
  SUBCASE("non-JSON replies are retried") {
    ScriptedBackend backend({{BackendReply::Status::Ok, "not json", ""},
                             {BackendReply::Status::Ok, kGoodReply, ""}});
    Assessment a = assess_incident(backend, mq, rec, policy, options);
    CHECK(a.s_match.value == Match::True);
    CHECK(backend.calls == 2);
  }
  SUBCASE("backoff grows exponentially") {
    ScriptedBackend backend({{BackendReply::Status::TransportError, "", "down"}});
    assess_incident(backend, mq, rec, policy, options);
    REQUIRE(sleeps.size() == 2);
    CHECK(sleeps[0] == std::chrono::milliseconds(100));
    CHECK(sleeps[1] == std::chrono::milliseconds(200));
  }
}

TEST_CASE("stub backend") {
  MonitoringQuestion mq = figure_mq();
  RetryPolicy policy;

  SUBCASE("keyword rule produces a full match with bounds") {
    StubBackend backend({{"self-driving", Match::True, Match::True, 1, 1}});
    Assessment a = assess_incident(backend, mq, minimal_record(), policy);
    CHECK(a.s_match.value == Match::True);
    CHECK(a.r_match.value == Match::True);
    CHECK(a.harm_lower == 1);
    CHECK(a.harm_upper == 1);
    CHECK(a.backend_id == std::string("stub+") + kPromptVersion);
  }
  SUBCASE("no matching rule defaults to a negative") {
    StubBackend backend({{"unrelated keyword", Match::True, Match::True, 1, 1}});
    Assessment a = assess_incident(backend, mq, minimal_record(), policy);
    CHECK(a.s_match.value == Match::False);
    CHECK(a.r_match.value == Match::False);
  }
  SUBCASE("rules match the incident block, not the question text") {
    // "self-driving" appears in the MQ's opportunity; the incident is about
    // something else entirely, so the rule must not fire.
    StubBackend backend({{"self-driving", Match::True, Match::True, 1, 1}});
    IncidentRecord other = minimal_record();
    other.title = "Loan model bias";
    other.description = "A credit model discriminated against applicants.";
    Assessment a = assess_incident(backend, mq, other, policy);
    CHECK(a.s_match.value == Match::False);
  }
  SUBCASE("marker tokens override rules") {
    StubBackend backend;
    IncidentRecord rec = minimal_record();
    rec.description = "Synthetic. <<assess s=true r=indeterminate lower=3 upper=7>>";
    Assessment a = assess_incident(backend, mq, rec, policy);
    CHECK(a.s_match.value == Match::True);
    CHECK(a.r_match.value == Match::Indeterminate);
    CHECK(a.harm_lower == 3);
    CHECK(a.harm_upper == 7);
  }
  SUBCASE("determinism") {
    StubBackend backend({{"self-driving", Match::True, Match::True, 2, 5}});
    Assessment a = assess_incident(backend, mq, minimal_record(), policy);
    Assessment b = assess_incident(backend, mq, minimal_record(), policy);
    CHECK(a == b);
  }
}

TEST_CASE("assess_batch is deterministic and concurrency-independent") {
  MonitoringQuestion mq1 = figure_mq();
  MonitoringQuestion mq2 = mq1;
  mq2.id = "second-question";
  std::vector<MonitoringQuestion> mqs{mq1, mq2};

  std::vector<IncidentRecord> records;
  for (int i = 0; i < 3; ++i) {
    IncidentRecord rec = minimal_record();
    rec.incident_id = "i" + std::to_string(i);
    rec.description = i == 0 ? "self-driving rollout" : "credit scoring dispute";
    records.push_back(rec);
  }

  StubBackend backend({{"self-driving", Match::True, Match::True, 1, 1}});
  RetryPolicy policy;

  auto sequential = assess_batch(backend, mqs, records, policy, 1);
  CHECK(sequential.size() == 6);
  for (int limit : {2, 4, 16}) {
    auto parallel = assess_batch(backend, mqs, records, policy, limit);
    CHECK(parallel == sequential);
  }
  CHECK(std::is_sorted(sequential.begin(), sequential.end(), [](const auto& a, const auto& b) {
    return std::tie(a.first, a.second.incident_id) < std::tie(b.first, b.second.incident_id);
  }));

  auto empty = assess_batch(backend, mqs, {}, policy, 4);
  CHECK(empty.empty());
}

TEST_CASE("assess_batch propagates backend construction faults") {
  class ThrowingBackend : public Backend {
   public:
    BackendReply complete(const PromptPayload&) override {
      throw ConfigError("credential expired mid-run");
    }
    std::string id() const override { return "throwing"; }
  };
  ThrowingBackend backend;
  std::vector<MonitoringQuestion> mqs{figure_mq()};
  std::vector<IncidentRecord> records{minimal_record(), minimal_record()};
  records[1].incident_id = "i2";
  RetryPolicy policy;
  CHECK_THROWS_AS(assess_batch(backend, mqs, records, policy, 2), ConfigError);
}

TEST_CASE("backend call defaults match the documented values") {
  CHECK(kDefaultTemperature == doctest::Approx(0.1));
  CHECK(kDefaultMaxTokens == 1000);
}
