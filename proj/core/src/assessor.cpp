#include "trendlens/assessor.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <ostream>
#include <sstream>
#include <thread>

#include "trendlens_prompt_template.hpp"
#include "trendlens/errors.hpp"

namespace trendlens {

namespace {

using nlohmann::json;

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

void replace_all(std::string& text, const std::string& from, const std::string& to) {
  size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ", ";
    out += parts[i];
  }
  return out.empty() ? "(none listed)" : out;
}

std::string render_incident_block(const AssessmentContext& ctx) {
  std::ostringstream os;
  os << "Title: " << ctx.title << "\n"
     << "Description: " << ctx.description << "\n"
     << "Alleged deployers: " << join(ctx.deployers) << "\n"
     << "Alleged developers: " << join(ctx.developers) << "\n"
     << "Alleged harmed parties: " << join(ctx.harmed_parties);
  if (ctx.report_excerpt) {
    os << "\nFirst linked report (excerpt):\n" << *ctx.report_excerpt;
  }
  return os.str();
}

// Bounds must be non-negative integers; anything else counts as absent.
std::optional<long long> bound_from_json(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return std::nullopt;
  if (it->is_number_integer()) {
    long long v = it->get<long long>();
    return v >= 0 ? std::optional<long long>{v} : std::nullopt;
  }
  if (it->is_number_float()) {
    double v = it->get<double>();
    if (v >= 0 && std::floor(v) == v) return static_cast<long long>(v);
  }
  return std::nullopt;
}

std::string text_or_empty(const json& doc, const char* key) {
  auto it = doc.find(key);
  return it != doc.end() && it->is_string() ? it->get<std::string>() : "";
}

MatchVerdict verdict_from_json(const json& doc, const char* match_key, const char* reason_key) {
  auto it = doc.find(match_key);
  if (it == doc.end()) return {Match::Indeterminate, "unparseable"};
  std::optional<Match> value;
  if (it->is_string()) value = match_from_string(it->get<std::string>());
  if (it->is_boolean()) value = it->get<bool>() ? Match::True : Match::False;
  if (!value) return {Match::Indeterminate, "unparseable"};
  return {*value, text_or_empty(doc, reason_key)};
}

// Marker grammar: <<assess s=true r=indeterminate lower=3 upper=7>>
// (lower/upper optional). Used by fixtures and the synthetic stream.
std::optional<StubRule> parse_marker(const std::string& text) {
  size_t begin = text.find("<<assess ");
  if (begin == std::string::npos) return std::nullopt;
  size_t end = text.find(">>", begin);
  if (end == std::string::npos) return std::nullopt;
  std::istringstream fields(text.substr(begin + 9, end - begin - 9));
  StubRule rule;
  std::string token;
  while (fields >> token) {
    size_t eq = token.find('=');
    if (eq == std::string::npos) continue;
    std::string key = token.substr(0, eq);
    std::string value = token.substr(eq + 1);
    if (key == "s" || key == "r") {
      auto m = match_from_string(value);
      if (!m) return std::nullopt;
      (key == "s" ? rule.s_match : rule.r_match) = *m;
    } else if (key == "lower" || key == "upper") {
      try {
        long long v = std::stoll(value);
        if (v < 0) return std::nullopt;
        (key == "lower" ? rule.harm_lower : rule.harm_upper) = v;
      } catch (const std::exception&) {
        return std::nullopt;
      }
    }
  }
  return rule;
}

json stub_reply(const StubRule& rule, const std::string& why) {
  json reply{{"s_match", to_string(rule.s_match)},
             {"s_reasoning", why},
             {"r_match", to_string(rule.r_match)},
             {"r_reasoning", why},
             {"harm_reasoning", rule.harm_lower || rule.harm_upper ? why : ""},
             {"suggested_proxy", ""}};
  if (rule.harm_lower) reply["harm_lower"] = *rule.harm_lower;
  if (rule.harm_upper) reply["harm_upper"] = *rule.harm_upper;
  return reply;
}

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt,
                                        bool rate_limited) {
  double scale = std::pow(2.0, attempt - 1);
  if (rate_limited) scale *= policy.rate_limit_multiplier;
  return std::chrono::milliseconds(
      static_cast<long long>(static_cast<double>(policy.base_delay.count()) * scale));
}

}  // namespace

std::string to_string(Match m) {
  switch (m) {
    case Match::True: return "true";
    case Match::False: return "false";
    case Match::Indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

std::optional<Match> match_from_string(std::string text) {
  text = lowercase(text);
  if (text == "true") return Match::True;
  if (text == "false") return Match::False;
  if (text == "indeterminate") return Match::Indeterminate;
  return std::nullopt;
}

json assessment_to_json(const Assessment& a) {
  json j{{"incident_id", a.incident_id},
         {"s_match", to_string(a.s_match.value)},
         {"s_reasoning", a.s_match.reasoning},
         {"r_match", to_string(a.r_match.value)},
         {"r_reasoning", a.r_match.reasoning},
         {"harm_reasoning", a.harm_reasoning},
         {"suggested_proxy", a.suggested_proxy},
         {"backend_id", a.backend_id}};
  if (a.harm_lower) j["harm_lower"] = *a.harm_lower;
  if (a.harm_upper) j["harm_upper"] = *a.harm_upper;
  return j;
}

Assessment assessment_from_json(const json& j) {
  Assessment a;
  a.incident_id = j.at("incident_id").get<std::string>();
  a.s_match = {match_from_string(j.value("s_match", "indeterminate"))
                   .value_or(Match::Indeterminate),
               j.value("s_reasoning", "")};
  a.r_match = {match_from_string(j.value("r_match", "indeterminate"))
                   .value_or(Match::Indeterminate),
               j.value("r_reasoning", "")};
  a.harm_lower = bound_from_json(j, "harm_lower");
  a.harm_upper = bound_from_json(j, "harm_upper");
  a.harm_reasoning = j.value("harm_reasoning", "");
  a.suggested_proxy = j.value("suggested_proxy", "");
  a.backend_id = j.value("backend_id", "");
  return a;
}

PromptPayload build_prompt(const MonitoringQuestion& mq, const AssessmentContext& ctx) {
  std::string user = detail::kPromptTemplate;
  replace_all(user, "{{subject}}", mq.subject);
  replace_all(user, "{{opportunity}}", mq.opportunity);
  replace_all(user, "{{risk_event}}", mq.risk_event);
  replace_all(user, "{{timeframe}}", mq.timeframe_text);
  replace_all(user, "{{harm_unit}}", mq.harm_unit);
  replace_all(user, "{{incident}}", render_incident_block(ctx));
  return PromptPayload{
      "You classify AI incident records against monitoring questions. "
      "Respond only with the requested flat JSON object.",
      std::move(user)};
}

Assessment parse_assessment(const std::string& response_text, const std::string& incident_id,
                            const std::string& backend_id) {
  json doc = json::parse(response_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw NotJson("backend reply is not a JSON object");
  }

  Assessment a;
  a.incident_id = incident_id;
  a.backend_id = backend_id;
  a.s_match = verdict_from_json(doc, "s_match", "s_reasoning");
  a.r_match = verdict_from_json(doc, "r_match", "r_reasoning");
  a.harm_lower = bound_from_json(doc, "harm_lower");
  a.harm_upper = bound_from_json(doc, "harm_upper");
  a.harm_reasoning = text_or_empty(doc, "harm_reasoning");
  a.suggested_proxy = text_or_empty(doc, "suggested_proxy");

  if (a.harm_lower && a.harm_upper && *a.harm_lower > *a.harm_upper) {
    std::swap(a.harm_lower, a.harm_upper);
    a.harm_reasoning += a.harm_reasoning.empty() ? "[bounds swapped by parser]"
                                                 : " [bounds swapped by parser]";
  }
  return a;
}

StubBackend::StubBackend(std::vector<StubRule> rules) : rules_(std::move(rules)) {}

BackendReply StubBackend::complete(const PromptPayload& prompt) {
  // Only the incident block participates in matching, so rule keywords never
  // collide with the monitoring question's own wording.
  std::string text = prompt.user;
  size_t begin = text.find("Incident record:\n");
  size_t end = text.find("\nDecide");
  if (begin != std::string::npos && end != std::string::npos && end > begin) {
    text = text.substr(begin, end - begin);
  }

  if (auto marker = parse_marker(text)) {
    return {BackendReply::Status::Ok, stub_reply(*marker, "marker token").dump(), ""};
  }
  std::string haystack = lowercase(text);
  for (const auto& rule : rules_) {
    if (haystack.find(lowercase(rule.keyword)) != std::string::npos) {
      return {BackendReply::Status::Ok, stub_reply(rule, "stub rule '" + rule.keyword + "'").dump(),
              ""};
    }
  }
  StubRule none{"", Match::False, Match::False, std::nullopt, std::nullopt};
  return {BackendReply::Status::Ok, stub_reply(none, "no stub rule matched").dump(), ""};
}

void RunLog::record(json entry) {
  std::lock_guard lock(mutex_);
  entries_.push_back(std::move(entry));
}

std::vector<json> RunLog::entries() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

void RunLog::write(std::ostream& out) const {
  for (const auto& entry : entries()) out << entry.dump() << "\n";
}

Assessment assess_incident(Backend& backend, const MonitoringQuestion& mq,
                           const IncidentRecord& record, const RetryPolicy& policy,
                           const AssessOptions& options) {
  const std::string backend_id = backend.id() + "+" + kPromptVersion;
  const PromptPayload prompt =
      build_prompt(mq, attach_context(record, options.include_report, options.max_context_chars));
  auto sleep = options.sleep ? options.sleep : [](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  };

  const int max_attempts = std::max(policy.max_attempts, 1);
  int attempts = 0;
  std::string outcome;
  std::optional<Assessment> result;

  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    attempts = attempt;
    BackendReply reply = backend.complete(prompt);
    bool rate_limited = reply.status == BackendReply::Status::RateLimited;
    if (reply.status == BackendReply::Status::Ok) {
      try {
        result = parse_assessment(reply.body, record.incident_id, backend_id);
        outcome = "ok";
        break;
      } catch (const NotJson&) {
        outcome = "not_json";
      }
    } else {
      outcome = rate_limited ? "rate_limited" : "transport_error";
    }
    if (attempt < max_attempts) sleep(backoff_delay(policy, attempt, rate_limited));
  }

  if (!result) {
    // Exhausted retries: both matches indeterminate, no bounds.
    Assessment a;
    a.incident_id = record.incident_id;
    a.backend_id = backend_id;
    a.s_match = {Match::Indeterminate, "retries exhausted (" + outcome + ")"};
    a.r_match = {Match::Indeterminate, "retries exhausted (" + outcome + ")"};
    outcome = "exhausted";
    result = std::move(a);
  }

  if (options.run_log) {
    options.run_log->record(json{{"incident_id", record.incident_id},
                                 {"mq_id", mq.id},
                                 {"backend_id", backend_id},
                                 {"attempts", attempts},
                                 {"outcome", outcome}});
  }
  return *result;
}

std::vector<std::pair<std::string, Assessment>> assess_batch(
    Backend& backend, std::span<const MonitoringQuestion> mqs,
    std::span<const IncidentRecord> records, const RetryPolicy& policy, int concurrency_limit,
    const AssessOptions& options) {
  struct Task {
    const MonitoringQuestion* mq;
    const IncidentRecord* record;
  };
  std::vector<Task> tasks;
  tasks.reserve(mqs.size() * records.size());
  for (const auto& mq : mqs) {
    for (const auto& record : records) tasks.push_back({&mq, &record});
  }

  std::vector<std::pair<std::string, Assessment>> results(tasks.size());
  std::vector<RunLog> task_logs(tasks.size());
  std::atomic<size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        AssessOptions task_options = options;
        task_options.run_log = options.run_log ? &task_logs[i] : nullptr;
        results[i] = {tasks[i].mq->id, assess_incident(backend, *tasks[i].mq, *tasks[i].record,
                                                       policy, task_options)};
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  int n_workers = std::max(1, std::min<int>(concurrency_limit, static_cast<int>(tasks.size())));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(n_workers));
  for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  // Log entries land in task order so the run log does not depend on thread
  // scheduling.
  if (options.run_log) {
    for (auto& log : task_logs) {
      for (auto& entry : log.entries()) options.run_log->record(std::move(entry));
    }
  }

  std::sort(results.begin(), results.end(), [](const auto& lhs, const auto& rhs) {
    if (lhs.first != rhs.first) return lhs.first < rhs.first;
    return lhs.second.incident_id < rhs.second.incident_id;
  });
  return results;
}

std::vector<StubRule> stub_rules_from_json(const json& rules) {
  std::vector<StubRule> out;
  if (!rules.is_array()) throw MalformedConfig("stub_rules must be an array");
  for (const auto& r : rules) {
    StubRule rule;
    rule.keyword = r.at("keyword").get<std::string>();
    if (r.contains("s_match")) {
      rule.s_match = match_from_string(r["s_match"].get<std::string>())
                         .value_or(Match::Indeterminate);
    }
    if (r.contains("r_match")) {
      rule.r_match = match_from_string(r["r_match"].get<std::string>())
                         .value_or(Match::Indeterminate);
    }
    if (r.contains("harm_lower")) rule.harm_lower = r["harm_lower"].get<long long>();
    if (r.contains("harm_upper")) rule.harm_upper = r["harm_upper"].get<long long>();
    out.push_back(std::move(rule));
  }
  return out;
}

}  // namespace trendlens
