#include <catch2/catch_amalgamated.hpp>

#include "simvc/portrait.hpp"
#include "support/fixtures.hpp"

using namespace simvc;

TEST_CASE("startup portrait renders all four sections") {
  const auto ds = test::tiny_dataset();
  const auto p = render_startup_portrait(ds, "s1", Date::parse_or_throw("2020-01-05"));
  CHECK(p.text.find("## Basic Information") != std::string::npos);
  CHECK(p.text.find("## Team Composition") != std::string::npos);
  CHECK(p.text.find("## Historical Financing Records") != std::string::npos);
  CHECK(p.text.find("## Affiliated Companies") != std::string::npos);
  CHECK(p.text.find("Keywords: robots, vision, saas") != std::string::npos);
  CHECK(p.text.find("r_s1_seed") == std::string::npos);  // ids stay in the structured form
  CHECK(p.structured["financing"].size() == 1);
}

TEST_CASE("startup with no prior rounds reads none recorded") {
  auto ds = test::tiny_dataset();
  const auto p = render_startup_portrait(ds, "s4", Date::parse_or_throw("2020-12-31"));
  CHECK(p.text.find("## Historical Financing Records\nnone recorded") != std::string::npos);
}

TEST_CASE("affiliates cover shared founders and shared investors") {
  const auto ds = test::tiny_dataset();
  // s2 shares founder fnd_x with s1; s2 also shares investor inv_a once s1's
  // seed round exists.
  const auto p = render_startup_portrait(ds, "s1", Date::parse_or_throw("2020-06-01"));
  const auto aff_at = p.text.find("## Affiliated Companies");
  REQUIRE(aff_at != std::string::npos);
  const std::string aff = p.text.substr(aff_at);
  CHECK(aff.find("s2") != std::string::npos);
  CHECK(aff.find("shared team: Fay Ito") != std::string::npos);
  CHECK(aff.find("shared investors: Ada Chen") != std::string::npos);
  CHECK(aff.find("s3") == std::string::npos);  // no shared person or investor
}

TEST_CASE("rendering is byte-identical across calls") {
  const auto ds = test::tiny_dataset();
  const auto cutoff = Date::parse_or_throw("2020-09-01");
  CHECK(render_startup_portrait(ds, "s1", cutoff).text ==
        render_startup_portrait(ds, "s1", cutoff).text);
  CHECK(render_investor_portrait(ds, "inv_a", cutoff).text ==
        render_investor_portrait(ds, "inv_a", cutoff).text);
}

TEST_CASE("post-cutoff events never reach the text") {
  auto ds = test::tiny_dataset();
  ds.rounds.push_back(
      test::round("r_future", "s1", "2021-05-05", Stage::other, {"inv_c"}));
  auto& p = ds.persons.at("inv_a");
  p.employment.push_back({"SENTINEL Corp", "Advisor", Date::parse_or_throw("2021-03-01"),
                          std::nullopt});
  ds.finalize();

  const auto cutoff = Date::parse_or_throw("2020-09-01");
  const auto sp = render_startup_portrait(ds, "s1", cutoff);
  CHECK(sp.text.find("2021-05-05") == std::string::npos);
  const auto ip = render_investor_portrait(ds, "inv_a", cutoff);
  CHECK(ip.text.find("SENTINEL") == std::string::npos);
  // Same person rendered later does include it.
  const auto later = render_investor_portrait(ds, "inv_a", Date::parse_or_throw("2021-06-01"));
  CHECK(later.text.find("SENTINEL Corp") != std::string::npos);
}

TEST_CASE("unknown ids raise typed errors") {
  const auto ds = test::tiny_dataset();
  CHECK_THROWS_AS(render_startup_portrait(ds, "nope", ds.as_of), UnknownStartup);
  CHECK_THROWS_AS(render_investor_portrait(ds, "nope", ds.as_of), UnknownPerson);
}

TEST_CASE("investor portrait splits early-stage from other deals") {
  auto ds = test::tiny_dataset();
  // inv_a: seed (s1), seed (s2), series_a (s1) -> all three early-stage.
  // Add one late-stage deal to exercise the split.
  ds.rounds.push_back(test::round("r_late", "s3", "2020-05-01", Stage::other, {"inv_a"}));
  ds.finalize();
  const auto p = render_investor_portrait(ds, "inv_a", Date::parse_or_throw("2021-01-01"));
  const auto early_at = p.text.find("### Early-stage investments");
  const auto other_at = p.text.find("### Other investments");
  REQUIRE(early_at != std::string::npos);
  REQUIRE(other_at != std::string::npos);
  CHECK(p.structured["early_stage_investments"].size() == 3);
  CHECK(p.structured["other_investments"].size() == 1);
  // Entries carry the invested startup's keywords for downstream affinity.
  CHECK(p.text.find("keywords: robots, vision, saas") != std::string::npos);
}

TEST_CASE("investor with no deals reads none recorded in both sections") {
  const auto ds = test::tiny_dataset();
  const auto p = render_investor_portrait(ds, "fnd_y", Date::parse_or_throw("2021-01-01"));
  CHECK(p.text.find("### Early-stage investments\nnone recorded") != std::string::npos);
  CHECK(p.text.find("### Other investments\nnone recorded") != std::string::npos);
}

TEST_CASE("cutoff before the only deal omits it") {
  const auto ds = test::tiny_dataset();
  const auto p = render_investor_portrait(ds, "inv_c", Date::parse_or_throw("2019-05-01"));
  CHECK(p.structured["early_stage_investments"].empty());
  CHECK(p.text.find("r_s3_seed") == std::string::npos);
  CHECK(p.text.find("s3") == std::string::npos);
}
