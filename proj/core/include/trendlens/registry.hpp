#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendlens/classify.hpp"

namespace trendlens {

struct RegistryEntry {
  std::string entry_id;
  std::string mq_id;
  std::string status;  // DRAFT | PUBLISHED
  std::optional<std::string> supersedes;
  std::string added_at;
  std::string file;
  std::string category;
};

// Append-only registry of answered monitoring questions: one JSON file per
// entry plus an index, all written via atomic rename.
class Registry {
 public:
  explicit Registry(std::filesystem::path dir);

  // Persists a run report. entry_id defaults to "<mq_id>-<seq>"; duplicate
  // ids are rejected and supersedes chains must stay acyclic.
  std::string add(const nlohmann::json& report, std::string entry_id = "",
                  const std::string& status = "PUBLISHED",
                  std::optional<std::string> supersedes = std::nullopt,
                  std::string added_at = "");

  // Transition over the two most recent PUBLISHED entries for the question.
  TransitionLabel diff(const std::string& mq_id) const;

  std::vector<RegistryEntry> list() const;

  nlohmann::json load_entry(const std::string& entry_id) const;

 private:
  std::filesystem::path dir_;

  nlohmann::json load_index() const;
  void store_index(const nlohmann::json& index) const;
};

}  // namespace trendlens
