#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendlens/incidents.hpp"
#include "trendlens/mq.hpp"

namespace trendlens {

// Prompt/schema revision; part of every backend_id so agreement runs can
// compare prompt revisions.
inline constexpr const char* kPromptVersion = "prompt_v1";

// Backend call defaults (recorded in the run log).
inline constexpr double kDefaultTemperature = 0.1;
inline constexpr int kDefaultMaxTokens = 1000;

enum class Match { True, False, Indeterminate };

std::string to_string(Match m);
// Lenient mapping used on backend output: unknown strings yield nullopt.
std::optional<Match> match_from_string(std::string text);

struct MatchVerdict {
  Match value = Match::Indeterminate;
  std::string reasoning;

  bool operator==(const MatchVerdict&) const = default;
};

struct Assessment {
  std::string incident_id;
  MatchVerdict s_match;
  MatchVerdict r_match;
  std::optional<long long> harm_lower;
  std::optional<long long> harm_upper;
  std::string harm_reasoning;
  std::string suggested_proxy;
  std::string backend_id;

  bool operator==(const Assessment&) const = default;
};

nlohmann::json assessment_to_json(const Assessment& a);
Assessment assessment_from_json(const nlohmann::json& j);

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{500};
  double rate_limit_multiplier = 4.0;  // longer waits on rate-limit errors
};

struct PromptPayload {
  std::string system;
  std::string user;

  bool operator==(const PromptPayload&) const = default;
};

struct BackendReply {
  enum class Status { Ok, TransportError, RateLimited };
  Status status = Status::Ok;
  std::string body;    // assistant message text when Ok
  std::string detail;  // diagnostic for the run log otherwise
};

// A chat-completion style assessor backend. Implementations must be safe to
// call from multiple worker threads at once.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendReply complete(const PromptPayload& prompt) = 0;
  virtual std::string id() const = 0;
};

// Deterministic local backend: matches keyword rules against the incident
// text, or honours an explicit `<<assess s=... r=... lower=... upper=...>>`
// marker token embedded in the record (used by fixtures and the simulator).
struct StubRule {
  std::string keyword;  // case-insensitive substring of title/description
  Match s_match = Match::True;
  Match r_match = Match::True;
  std::optional<long long> harm_lower;
  std::optional<long long> harm_upper;
};

class StubBackend : public Backend {
 public:
  explicit StubBackend(std::vector<StubRule> rules = {});
  BackendReply complete(const PromptPayload& prompt) override;
  std::string id() const override { return "stub"; }

 private:
  std::vector<StubRule> rules_;
};

struct RemoteBackendConfig {
  std::string base_url = "https://openrouter.ai";
  std::string endpoint_path = "/api/v1/chat/completions";
  std::string model = "anthropic/claude-3.5-haiku";
  double temperature = kDefaultTemperature;
  int max_tokens = kDefaultMaxTokens;
  std::string api_key;  // empty: read TRENDLENS_API_KEY from the environment
  int timeout_seconds = 120;
};

// Chat-completions client over HTTPS. Throws ConfigError when no credential
// is available. One HTTP connection per call, so concurrent use is safe.
std::unique_ptr<Backend> make_remote_backend(const RemoteBackendConfig& config);

// Append-only JSON-lines run log; one entry per assessor call.
class RunLog {
 public:
  void record(nlohmann::json entry);
  std::vector<nlohmann::json> entries() const;
  void write(std::ostream& out) const;

 private:
  mutable std::mutex mutex_;
  std::vector<nlohmann::json> entries_;
};

struct AssessOptions {
  bool include_report = false;
  int max_context_chars = 4000;
  // Injectable for tests; defaults to a real sleep.
  std::function<void(std::chrono::milliseconds)> sleep;
  RunLog* run_log = nullptr;
};

PromptPayload build_prompt(const MonitoringQuestion& mq, const AssessmentContext& ctx);

// Parses the backend's flat JSON reply. Unknown keys are ignored; missing or
// unrecognised match values map to INDETERMINATE with reasoning
// "unparseable"; swapped bounds are normalised and flagged. Throws NotJson
// when the reply is not a JSON object at all (a retryable backend fault).
Assessment parse_assessment(const std::string& response_text, const std::string& incident_id,
                            const std::string& backend_id);

// Full per-incident assessment with retries. Transport faults and NotJson
// retry with exponential backoff (rate-limit signals wait longer); after
// max_attempts the result has both matches INDETERMINATE and no bounds.
Assessment assess_incident(Backend& backend, const MonitoringQuestion& mq,
                           const IncidentRecord& record, const RetryPolicy& policy,
                           const AssessOptions& options = {});

// Assesses every (mq, record) pair with at most concurrency_limit in-flight
// calls. Output is sorted by (mq_id, incident_id) and equals the sequential
// result for any deterministic backend.
std::vector<std::pair<std::string, Assessment>> assess_batch(
    Backend& backend, std::span<const MonitoringQuestion> mqs,
    std::span<const IncidentRecord> records, const RetryPolicy& policy, int concurrency_limit,
    const AssessOptions& options = {});

std::vector<StubRule> stub_rules_from_json(const nlohmann::json& rules);

}  // namespace trendlens
