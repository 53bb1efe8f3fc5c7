#include <filesystem>
#include <random>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "trendlens/errors.hpp"
#include "trendlens/registry.hpp"
#include "trendlens/report.hpp"

using namespace trendlens;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("trendlens-reg-" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

json report_with_category(const std::string& mq_id, Category category) {
  RunReport report;
  report.mq.id = mq_id;
  report.mq.subject = "S";
  report.mq.opportunity = "O";
  report.mq.risk_event = "R";
  report.mq.timeframe_text = "year";
  report.mq.harm_unit = "incidents";
  report.periods = {Period{Date(2024, 1, 1), Date(2024, 12, 31)},
                    Period{Date(2025, 1, 1), Date(2025, 12, 31)}};
  report.merged_harm.status = TrendStatus::Increasing;
  report.merged_harm.growth_rate = 0.5;
  report.exposure_outcome.status = TrendStatus::Increasing;
  report.exposure_outcome.growth_rate = 0.2;
  report.trajectory.category = category;
  report.trajectory.e_direction = Direction::Up;
  report.trajectory.hhat_direction =
      category == Category::Mitigating ? Direction::Down : Direction::Up;
  report.caveats = {"test caveat"};
  report.run_metadata = {"1970-01-01T00:00:00Z", "stub+prompt_v1", "digest", "0.1.0"};
  return report_to_json(report);
}

}  // namespace

TEST_CASE("add, list, and load entries") {
  TempDir dir;
  Registry registry(dir.path);
  std::string id1 = registry.add(report_with_category("mq-a", Category::Escalating));
  CHECK(id1 == "mq-a-1");
  std::string id2 = registry.add(report_with_category("mq-a", Category::Mitigating), "", "PUBLISHED",
                                 id1);
  CHECK(id2 == "mq-a-2");

  auto entries = registry.list();
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].entry_id == "mq-a-1");
  CHECK(entries[0].category == "ESCALATING");
  CHECK(entries[1].supersedes == "mq-a-1");
  CHECK(fs::exists(dir.path / "index.json"));
  CHECK(fs::exists(dir.path / "entry-mq-a-1.json"));
  CHECK(fs::exists(dir.path / "entry-mq-a-2.json"));

  json loaded = registry.load_entry("mq-a-2");
  CHECK(loaded["report"]["trajectory"]["category"] == "MITIGATING");
}

TEST_CASE("duplicate entry ids are rejected") {
  TempDir dir;
  Registry registry(dir.path);
  registry.add(report_with_category("mq-a", Category::Escalating), "fixed-id");
  CHECK_THROWS_AS(registry.add(report_with_category("mq-a", Category::Mitigating), "fixed-id"),
                  DuplicateEntry);
}

TEST_CASE("supersedes chains must stay acyclic") {
  TempDir dir;
  Registry registry(dir.path);
  registry.add(report_with_category("mq-a", Category::Escalating), "e1");
  registry.add(report_with_category("mq-a", Category::Mitigating), "e2", "PUBLISHED", "e1");
  CHECK_THROWS_AS(
      registry.add(report_with_category("mq-a", Category::Receding), "e1b", "PUBLISHED", "e1b"),
      Error);
}

TEST_CASE("diff runs transition over the two latest published entries") {
  TempDir dir;
  Registry registry(dir.path);

  SUBCASE("unknown question") { CHECK_THROWS_AS(registry.diff("nope"), UnknownMq); }

  registry.add(report_with_category("mq-a", Category::Escalating));
  SUBCASE("single entry cannot diff") { CHECK_THROWS_AS(registry.diff("mq-a"), SingleEntry); }

  SUBCASE("escalating to mitigating is the intervention reading") {
    registry.add(report_with_category("mq-a", Category::Mitigating));
    TransitionLabel label = registry.diff("mq-a");
    CHECK(label.from == Category::Escalating);
    CHECK(label.to == Category::Mitigating);
    CHECK(label.interpretation_key == "possible successful intervention");

    // Consistent with applying transition directly to the stored results.
    TrajectoryResult prev =
        trajectory_from_json(registry.load_entry("mq-a-1")["report"]["trajectory"]);
    TrajectoryResult curr =
        trajectory_from_json(registry.load_entry("mq-a-2")["report"]["trajectory"]);
    CHECK(transition(prev, curr).interpretation_key == label.interpretation_key);
  }
  SUBCASE("draft entries do not participate in diff") {
    registry.add(report_with_category("mq-a", Category::Mitigating), "", "DRAFT");
    CHECK_THROWS_AS(registry.diff("mq-a"), SingleEntry);
  }
}

TEST_CASE("invalid reports are refused") {
  TempDir dir;
  Registry registry(dir.path);
  CHECK_THROWS_AS(registry.add(json{{"not", "a report"}}), Error);
  CHECK_THROWS_AS(registry.add(report_with_category("mq-a", Category::Escalating), "", "boom"),
                  Error);
}
