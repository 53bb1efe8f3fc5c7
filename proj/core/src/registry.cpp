#include "trendlens/registry.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "trendlens/errors.hpp"
#include "trendlens/report.hpp"

namespace trendlens {

namespace {

using nlohmann::json;

RegistryEntry entry_from_json(const json& j) {
  RegistryEntry e;
  e.entry_id = j.at("entry_id").get<std::string>();
  e.mq_id = j.at("mq_id").get<std::string>();
  e.status = j.value("status", "DRAFT");
  if (j.contains("supersedes") && j["supersedes"].is_string()) {
    e.supersedes = j["supersedes"].get<std::string>();
  }
  e.added_at = j.value("added_at", "");
  e.file = j.value("file", "");
  e.category = j.value("category", "");
  return e;
}

}  // namespace

Registry::Registry(std::filesystem::path dir) : dir_(std::move(dir)) {}

json Registry::load_index() const {
  std::ifstream in(dir_ / "index.json");
  if (!in) return json{{"entries", json::array()}};
  json index = json::parse(in, nullptr, false);
  if (index.is_discarded() || !index.contains("entries")) {
    throw Error("corrupt registry index: " + (dir_ / "index.json").string());
  }
  return index;
}

void Registry::store_index(const json& index) const {
  write_text_atomically(index.dump(2) + "\n", dir_ / "index.json");
}

std::string Registry::add(const json& report, std::string entry_id, const std::string& status,
                          std::optional<std::string> supersedes, std::string added_at) {
  std::string schema_error;
  if (!report_schema_check(report, &schema_error)) {
    throw Error("refusing to register an invalid report: " + schema_error);
  }
  if (status != "DRAFT" && status != "PUBLISHED") {
    throw Error("entry status must be DRAFT or PUBLISHED");
  }

  const std::string mq_id = report["mq"]["id"].get<std::string>();
  json index = load_index();

  if (entry_id.empty()) {
    int seq = 1;
    for (const auto& j : index["entries"]) {
      if (j["mq_id"] == mq_id) seq += 1;
    }
    std::ostringstream os;
    os << mq_id << "-" << seq;
    entry_id = os.str();
  }

  std::set<std::string> known_ids;
  for (const auto& j : index["entries"]) {
    if (j["entry_id"] == entry_id) throw DuplicateEntry("entry id already exists: " + entry_id);
    known_ids.insert(j["entry_id"].get<std::string>());
  }

  // Walk the supersedes chain from the new entry; any repeat is a cycle.
  if (supersedes) {
    std::set<std::string> visited{entry_id};
    std::optional<std::string> cursor = supersedes;
    while (cursor) {
      if (!visited.insert(*cursor).second) {
        throw Error("supersedes chain would become cyclic at " + *cursor);
      }
      std::optional<std::string> next;
      for (const auto& j : index["entries"]) {
        if (j["entry_id"] == *cursor && j.contains("supersedes") &&
            j["supersedes"].is_string()) {
          next = j["supersedes"].get<std::string>();
        }
      }
      cursor = next;
    }
  }

  if (added_at.empty()) added_at = "1970-01-01T00:00:00Z";
  const std::string file = "entry-" + entry_id + ".json";
  json entry{{"entry_id", entry_id}, {"mq_id", mq_id},   {"status", status},
             {"added_at", added_at}, {"file", file},
             {"category", report["trajectory"]["category"]}};
  if (supersedes) entry["supersedes"] = *supersedes;

  json stored = json{{"entry", entry}, {"report", report}};
  write_text_atomically(stored.dump(2) + "\n", dir_ / file);
  index["entries"].push_back(entry);
  store_index(index);
  return entry_id;
}

std::vector<RegistryEntry> Registry::list() const {
  std::vector<RegistryEntry> out;
  const json index = load_index();
  for (const auto& j : index["entries"]) out.push_back(entry_from_json(j));
  return out;
}

json Registry::load_entry(const std::string& entry_id) const {
  const json index = load_index();
  for (const auto& j : index["entries"]) {
    if (j["entry_id"] == entry_id) {
      std::ifstream in(dir_ / j["file"].get<std::string>());
      if (!in) throw Error("missing registry entry file for " + entry_id);
      return json::parse(in);
    }
  }
  throw UnknownMq("no registry entry with id " + entry_id);
}

TransitionLabel Registry::diff(const std::string& mq_id) const {
  std::vector<RegistryEntry> published;
  for (const auto& entry : list()) {
    if (entry.mq_id == mq_id && entry.status == "PUBLISHED") published.push_back(entry);
  }
  if (published.empty()) throw UnknownMq("no published entries for monitoring question " + mq_id);
  if (published.size() < 2) {
    throw SingleEntry("only one published entry for " + mq_id + "; nothing to diff");
  }

  const RegistryEntry& prev = published[published.size() - 2];
  const RegistryEntry& curr = published.back();
  TrajectoryResult prev_result =
      trajectory_from_json(load_entry(prev.entry_id)["report"]["trajectory"]);
  TrajectoryResult curr_result =
      trajectory_from_json(load_entry(curr.entry_id)["report"]["trajectory"]);
  return transition(prev_result, curr_result);
}

}  // namespace trendlens
