#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "simvc/evaluation.hpp"
#include "simvc/synth.hpp"

using namespace simvc;

namespace {

ScoredVerdict sv(const std::string& id, const std::string& date, double score, bool verdict,
                 bool label) {
  return {id, Date::parse_or_throw(date), score, verdict, label};
}

/// Brute-force P@K: enumerate every permutation consistent with the sort key
/// (descending score, ascending id) — with the deterministic tie-break there
/// is exactly one, so a direct stable recount suffices.
double brute_force_p_at_k(std::vector<ScoredVerdict> rows, size_t K) {
  std::sort(rows.begin(), rows.end(), [](const ScoredVerdict& a, const ScoredVerdict& b) {
    return a.score != b.score ? a.score > b.score : a.startup_id < b.startup_id;
  });
  size_t hits = 0;
  for (size_t i = 0; i < K; ++i) hits += rows[i].label;
  return 100.0 * double(hits) / double(K);
}

}  // namespace

TEST_CASE("p_at_k counts positives in the top K") {
  std::vector<ScoredVerdict> rows;
  for (int i = 0; i < 10; ++i) {
    rows.push_back(sv("s" + std::to_string(i), "2021-01-05", 1.0 - 0.05 * i, true, i < 4));
  }
  CHECK(p_at_k(rows, 10) == Catch::Approx(40.0));
  CHECK(p_at_k(rows, 4) == Catch::Approx(100.0));
  CHECK_THROWS_AS(p_at_k(rows, 11), CohortSmallerThanK);
}

TEST_CASE("equal scores break ties by ascending startup id") {
  // All scores equal, labels alternate; ids fix the ranking: s0, s1, s2, s3.
  std::vector<ScoredVerdict> rows = {
      sv("s3", "2021-01-01", 0.5, true, true),
      sv("s1", "2021-01-01", 0.5, true, false),
      sv("s0", "2021-01-01", 0.5, true, true),
      sv("s2", "2021-01-01", 0.5, true, false),
  };
  // top-2 under the tie-break are s0 (pos) and s1 (neg) -> 50%.
  CHECK(p_at_k(rows, 2) == Catch::Approx(50.0));
  CHECK(p_at_k(rows, 2) == Catch::Approx(brute_force_p_at_k(rows, 2)));
}

TEST_CASE("p_at_k is invariant under monotone score transforms") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ScoredVerdict> rows;
    for (int i = 0; i < 12; ++i) {
      rows.push_back(sv("s" + std::to_string(i), "2021-03-05", rng.uniform(), true,
                        rng.bernoulli(0.3)));
    }
    auto transformed = rows;
    for (auto& r : transformed) r.score = std::exp(3.0 * r.score) + 1.0;
    CHECK(p_at_k(rows, 5) == p_at_k(transformed, 5));
  }
}

TEST_CASE("ap_at_k averages monthly precision over usable months") {
  std::vector<ScoredVerdict> rows;
  // Month A: P@2 = 100, month B: P@2 = 50, month C: too small -> skipped.
  rows.push_back(sv("a1", "2021-01-03", 0.9, true, true));
  rows.push_back(sv("a2", "2021-01-08", 0.8, true, true));
  rows.push_back(sv("b1", "2021-02-03", 0.9, true, true));
  rows.push_back(sv("b2", "2021-02-08", 0.8, true, false));
  rows.push_back(sv("c1", "2021-03-03", 0.9, true, true));
  const auto res = ap_at_k(rows, 2);
  CHECK(res.value == Catch::Approx(75.0));
  CHECK(res.months_used == std::vector<std::string>{"2021-01", "2021-02"});
  CHECK(res.months_skipped == std::vector<std::string>{"2021-03"});

  SECTION("single month equals its own P@K") {
    const std::vector<ScoredVerdict> one = {rows[0], rows[1]};
    CHECK(ap_at_k(one, 2).value == Catch::Approx(100.0));
  }
  SECTION("all months too small raises") {
    CHECK_THROWS_AS(ap_at_k(rows, 6), AllMonthsSkipped);
  }
}

TEST_CASE("three-month cohort matches a spreadsheet-style recount") {
  Rng rng(11);
  std::vector<ScoredVerdict> rows;
  const char* months[] = {"2021-04", "2021-05", "2021-06"};
  for (int m = 0; m < 3; ++m) {
    for (int i = 0; i < 6; ++i) {
      rows.push_back(sv("s" + std::to_string(m) + "_" + std::to_string(i),
                        std::string(months[m]) + "-10", rng.uniform(), true, rng.bernoulli(0.4)));
    }
  }
  double manual = 0.0;
  for (int m = 0; m < 3; ++m) {
    std::vector<ScoredVerdict> month_rows;
    for (const auto& r : rows) {
      if (r.first_round_date.month_key() == months[m]) month_rows.push_back(r);
    }
    manual += brute_force_p_at_k(month_rows, 3);
  }
  manual /= 3.0;
  CHECK(ap_at_k(rows, 3).value == Catch::Approx(manual).margin(1e-9));
}

TEST_CASE("classification metrics on degenerate predictors") {
  std::vector<ScoredVerdict> rows;
  for (int i = 0; i < 10; ++i) {
    rows.push_back(sv("s" + std::to_string(i), "2021-01-05", 0.5, true, i < 2));  // all verdict true
  }
  const auto m = classification_metrics(rows);
  CHECK(m.precision == Catch::Approx(20.0));
  REQUIRE(m.recall.has_value());
  CHECK(*m.recall == Catch::Approx(100.0));

  SECTION("perfect verdicts") {
    for (auto& r : rows) r.verdict = r.label;
    const auto p = classification_metrics(rows);
    CHECK(p.precision == Catch::Approx(100.0));
    CHECK(*p.recall == Catch::Approx(100.0));
    CHECK(p.f1 == Catch::Approx(100.0));
  }
  SECTION("no positive labels leaves recall absent") {
    for (auto& r : rows) r.label = false;
    const auto p = classification_metrics(rows);
    CHECK_FALSE(p.recall.has_value());
  }
}

TEST_CASE("random baseline respects its rate") {
  std::vector<CohortEntry> cohort;
  for (int i = 0; i < 10000; ++i) {
    cohort.push_back({"s" + std::to_string(i), Date::parse_or_throw("2021-01-05"), i % 5 == 0});
  }
  SECTION("rate 0 and 1 are degenerate") {
    auto all_false = random_baseline(cohort, 0.0, 1);
    auto all_true = random_baseline(cohort, 1.0, 1);
    CHECK(std::none_of(all_false.begin(), all_false.end(),
                       [](const ScoredVerdict& v) { return v.verdict; }));
    CHECK(std::all_of(all_true.begin(), all_true.end(),
                      [](const ScoredVerdict& v) { return v.verdict; }));
  }
  SECTION("law of large numbers at rate 0.2") {
    const auto rows = random_baseline(cohort, 0.2, 7);
    double mean = 0;
    for (const auto& r : rows) mean += r.verdict ? 1 : 0;
    mean /= double(rows.size());
    CHECK(mean == Catch::Approx(0.2).margin(0.01));
  }
}

TEST_CASE("metric-level averaging across runs") {
  std::vector<CohortEntry> cohort;
  for (int i = 0; i < 8; ++i) {
    cohort.push_back({"s" + std::to_string(i), Date::parse_or_throw("2021-01-05"), i < 3});
  }
  auto make_run = [&](double base) {
    std::vector<SimulationOutcome> run;
    for (int i = 0; i < 8; ++i) {
      SimulationOutcome o;
      o.startup_id = "s" + std::to_string(i);
      o.first_round_date = Date::parse_or_throw("2021-01-05");
      o.p_success = i < 3 ? base : 0.0;
      o.verdict = o.p_success > 0;
      run.push_back(o);
    }
    return run;
  };
  const auto rep = evaluate_runs({make_run(0.5), make_run(0.9)}, cohort, {4});
  // Both runs rank the 3 positives first: P@4 = 75 in each run.
  CHECK(rep.ap_at_k.at(4) == Catch::Approx(75.0));
  CHECK(rep.precision == Catch::Approx(100.0));
  REQUIRE(rep.recall.has_value());
  CHECK(*rep.recall == Catch::Approx(100.0));
  CHECK(rep.n_runs == 2);
  REQUIRE(rep.per_month.size() == 1);
  CHECK(rep.per_month[0].cohort_size == 8);
}

TEST_CASE("consistency: scripted backend repeats are identical, noisy ones vary") {
  synth::SynthConfig cfg;
  cfg.n_startups = 40;
  cfg.n_investors = 32;
  cfg.seed = 19;
  const auto data = synth::generate(cfg);
  std::vector<std::string> ids;
  for (const auto& [id, s] : data.dataset.startups) {
    if (id.rfind("coh", 0) == 0 && ids.size() < 5) ids.push_back(id);
  }
  REQUIRE(ids.size() == 5);

  SimulateConfig sim;
  sim.k = 5;
  sim.mode = InteractionMode::none;
  sim.seed = 2;
  const auto templates = PromptTemplates::defaults();

  auto scripted = std::make_shared<ScriptedBackend>();
  const BackendFactory pure = [&](const std::string&, int) { return scripted; };
  const auto res = consistency(data.dataset, ids, 5, sim, pure, templates);
  CHECK(res.variation_fraction == 0.0);
  for (const auto& [id, scores] : res.scores) CHECK(scores.size() == 5);

  SECTION("repeats=1 is trivially consistent") {
    CHECK(consistency(data.dataset, ids, 1, sim, pure, templates).variation_fraction == 0.0);
  }

  SECTION("an always-flipping backend varies when flips differ across repeats") {
    const BackendFactory noisy = [&](const std::string& id, int repeat) {
      // Heavy noise and a per-repeat seed: scores differ across repeats.
      return std::make_shared<NoisyBackend>(scripted, 0.5,
                                            mix_seed(99, id + ":" + std::to_string(repeat)));
    };
    const auto loud = consistency(data.dataset, ids, 5, sim, noisy, templates);
    CHECK(loud.variation_fraction > 0.0);
  }
}
