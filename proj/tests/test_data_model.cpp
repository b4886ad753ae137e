#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "simvc/data_model.hpp"
#include "support/fixtures.hpp"

using namespace simvc;
namespace fs = std::filesystem;

namespace {

fs::path temp_bundle_dir(const std::string& tag) {
  const auto dir = fs::temp_directory_path() / ("simvc_dm_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_lines(const fs::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p);
  for (const auto& l : lines) out << l << "\n";
}

}  // namespace

TEST_CASE("ingest returns the bundle as-is when everything is valid") {
  const auto dir = temp_bundle_dir("ok");
  write_lines(dir / "persons.jsonl",
              {R"({"person_id":"p1","name":"Ada","gender":"female","education":[],"employment":[]})",
               R"({"person_id":"p2","name":"Bo"})",
               R"({"person_id":"p3","name":"Cy"})"});
  write_lines(dir / "startups.jsonl",
              {R"({"startup_id":"a","founding_date":"2018-01-01","industry":"x","description":"d","location":"l","products":[],"keywords":["k"],"team":["p3"]})",
               R"({"startup_id":"b","founding_date":"2019-05-01","industry":"y","description":"d","location":"l","products":["p"],"keywords":[],"team":[]})"});
  write_lines(dir / "rounds.jsonl",
              {R"({"round_id":"r1","startup_id":"a","round_date":"2019-01-01","stage":"seed","amount":1000000.0,"investor_ids":["p1"]})",
               R"({"round_id":"r2","startup_id":"b","round_date":"2020-03-01","stage":"angel","investor_ids":["p1","p2"]})"});

  const auto ds = ingest(dir, Date::parse_or_throw("2021-01-01"));
  CHECK(ds.persons.size() == 3);
  CHECK(ds.startups.size() == 2);
  CHECK(ds.rounds.size() == 2);
}

TEST_CASE("rounds after as_of are excluded and logged") {
  const auto dir = temp_bundle_dir("cutoff");
  write_lines(dir / "persons.jsonl", {R"({"person_id":"p1","name":"Ada"})"});
  write_lines(dir / "startups.jsonl",
              {R"({"startup_id":"a","founding_date":"2018-01-01","industry":"x","description":"d","location":"l","products":[],"keywords":[],"team":[]})"});
  write_lines(dir / "rounds.jsonl",
              {R"({"round_id":"r1","startup_id":"a","round_date":"2019-01-01","stage":"seed","investor_ids":["p1"]})",
               R"({"round_id":"r2","startup_id":"a","round_date":"2022-06-01","stage":"series_a","investor_ids":["p1"]})"});

  const auto rep = ingest_report(dir, Date::parse_or_throw("2021-01-01"));
  CHECK(rep.dataset.rounds.size() == 1);
  REQUIRE(rep.excluded_after_cutoff.size() == 1);
  CHECK(rep.excluded_after_cutoff[0].message.find("r2") != std::string::npos);
  CHECK(rep.rejected.empty());
}

TEST_CASE("dangling startup reference raises a named error") {
  const auto dir = temp_bundle_dir("dangling");
  write_lines(dir / "persons.jsonl", {R"({"person_id":"p1","name":"Ada"})"});
  write_lines(dir / "startups.jsonl", {});
  write_lines(dir / "rounds.jsonl",
              {R"({"round_id":"r1","startup_id":"ghost","round_date":"2019-01-01","stage":"seed","investor_ids":["p1"]})"});

  CHECK_THROWS_WITH(ingest(dir, Date::parse_or_throw("2021-01-01")),
                    Catch::Matchers::ContainsSubstring("ghost"));
  CHECK_THROWS_AS(ingest(dir, Date::parse_or_throw("2021-01-01")), DanglingReference);
}

TEST_CASE("round predating founding is a temporal violation") {
  const auto dir = temp_bundle_dir("temporal");
  write_lines(dir / "persons.jsonl", {R"({"person_id":"p1","name":"Ada"})"});
  write_lines(dir / "startups.jsonl",
              {R"({"startup_id":"a","founding_date":"2020-01-01","industry":"x","description":"d","location":"l","products":[],"keywords":[],"team":[]})"});
  write_lines(dir / "rounds.jsonl",
              {R"({"round_id":"r1","startup_id":"a","round_date":"2019-01-01","stage":"seed","investor_ids":["p1"]})"});
  CHECK_THROWS_AS(ingest(dir, Date::parse_or_throw("2021-01-01")), TemporalViolation);
}

TEST_CASE("lenient mode rejects bad records with line-numbered diagnostics") {
  const auto dir = temp_bundle_dir("lenient");
  write_lines(dir / "persons.jsonl",
              {R"({"person_id":"p1","name":"Ada"})", "{ not json", R"({"name":"NoId"})"});
  write_lines(dir / "startups.jsonl",
              {R"({"startup_id":"a","founding_date":"2018-01-01","industry":"x","description":"d","location":"l","products":[],"keywords":[],"team":[]})"});
  write_lines(dir / "rounds.jsonl",
              {R"({"round_id":"r1","startup_id":"a","round_date":"2019-01-01","stage":"seed","investor_ids":[]})"});

  const auto rep = ingest_report(dir, Date::parse_or_throw("2021-01-01"), /*strict=*/false);
  REQUIRE(rep.rejected.size() == 3);
  CHECK(rep.rejected[0].file == "persons.jsonl");
  CHECK(rep.rejected[0].line == 2);
  CHECK(rep.rejected[1].line == 3);
  CHECK(rep.rejected[2].file == "rounds.jsonl");
  CHECK(rep.dataset.persons.size() == 1);
  CHECK(rep.dataset.rounds.empty());
}

TEST_CASE("serialize then ingest round-trips to an equal dataset") {
  const auto ds = test::tiny_dataset();
  const auto dir = temp_bundle_dir("roundtrip");
  serialize(ds, dir);
  const auto back = ingest(dir, ds.as_of);
  CHECK(datasets_equal(ds, back));
}

TEST_CASE("first_round picks the earliest seed/angel round") {
  auto ds = test::tiny_dataset();
  CHECK(first_round(ds, "s1").round_id == "r_s1_seed");

  SECTION("same-date rounds tie-break by round id") {
    ds.rounds.push_back(test::round("r_s1_seed0", "s1", "2020-01-05", Stage::angel, {"inv_c"}));
    ds.finalize();
    CHECK(first_round(ds, "s1").round_id == "r_s1_seed");
    ds.rounds.push_back(test::round("a_first", "s1", "2020-01-05", Stage::seed, {"inv_c"}));
    ds.finalize();
    CHECK(first_round(ds, "s1").round_id == "a_first");
  }

  SECTION("startup with only late-stage rounds has no qualifying round") {
    ds.startups.emplace("s9", test::startup("s9", "2018-01-01"));
    ds.rounds.push_back(test::round("r9", "s9", "2019-01-01", Stage::series_a, {"inv_a"}));
    ds.finalize();
    CHECK_THROWS_AS(first_round(ds, "s9"), NoQualifyingRound);
  }
}

TEST_CASE("follow-on label uses the (first, first + horizon] window") {
  auto ds = test::tiny_dataset();
  // s1: first 2020-01-05, series_a 2020-09-01 -> inside 365 days.
  CHECK(label_followon(ds, "s1", 365));
  // s4: first 2021-02-01, nothing afterwards.
  CHECK_FALSE(label_followon(ds, "s4", 365));

  SECTION("a round exactly at the horizon boundary counts") {
    ds.rounds.push_back(test::round("rb", "s4", "2022-02-01", Stage::series_a, {"inv_a"}));
    ds.finalize();
    CHECK(label_followon(ds, "s4", 365));
  }
  SECTION("a round one day past the horizon does not count") {
    ds.rounds.push_back(test::round("rb", "s4", "2022-02-02", Stage::series_a, {"inv_a"}));
    ds.finalize();
    CHECK_FALSE(label_followon(ds, "s4", 365));
  }
  SECTION("label not observable when as_of is too early") {
    ds.as_of = Date::parse_or_throw("2021-06-01");
    CHECK_THROWS_AS(label_followon(ds, "s4", 365), LabelNotObservable);
  }
}
