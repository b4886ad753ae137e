#pragma once

#include <string>
#include <vector>

#include "simvc/data_model.hpp"

namespace simvc::test {

inline Person person(const std::string& id, const std::string& name) {
  Person p;
  p.person_id = id;
  p.name = name;
  return p;
}

inline Startup startup(const std::string& id, const std::string& founding,
                       std::vector<std::string> keywords = {},
                       std::vector<std::string> team = {}) {
  Startup s;
  s.startup_id = id;
  s.founding_date = Date::parse_or_throw(founding);
  s.industry = "software";
  s.description = "A test company.";
  s.location = "Testville";
  s.keywords = std::move(keywords);
  s.team = std::move(team);
  return s;
}

inline FundingRound round(const std::string& id, const std::string& startup_id,
                          const std::string& date, Stage stage,
                          std::vector<std::string> investors) {
  FundingRound r;
  r.round_id = id;
  r.startup_id = startup_id;
  r.round_date = Date::parse_or_throw(date);
  r.stage = stage;
  r.investor_ids = std::move(investors);
  return r;
}

/// A small hand-built ecosystem:
///   s1 first seed 2020-01-05 by {inv_a}, series_a 2020-09-01 by {inv_a, inv_b}
///   s2 seed 2019-03-01 by {inv_a, inv_b}   (s2 shares founder "fnd_x" with s1)
///   s3 seed 2019-06-01 by {inv_b, inv_c}
///   s4 seed 2021-02-01 by {inv_c}, no follow-on
inline Dataset tiny_dataset(const std::string& as_of = "2022-12-31") {
  Dataset ds;
  ds.as_of = Date::parse_or_throw(as_of);
  for (const auto& [id, name] :
       std::vector<std::pair<std::string, std::string>>{{"inv_a", "Ada Chen"},
                                                        {"inv_b", "Bo Silva"},
                                                        {"inv_c", "Cy Novak"},
                                                        {"fnd_x", "Fay Ito"},
                                                        {"fnd_y", "Gil Osei"}}) {
    ds.persons.emplace(id, person(id, name));
  }
  ds.startups.emplace("s1", startup("s1", "2019-06-01", {"robots", "vision", "saas"}, {"fnd_x"}));
  ds.startups.emplace("s2", startup("s2", "2018-05-01", {"vision", "saas"}, {"fnd_x", "fnd_y"}));
  ds.startups.emplace("s3", startup("s3", "2019-01-01", {"fintech"}, {"fnd_y"}));
  ds.startups.emplace("s4", startup("s4", "2020-11-01", {"biotech"}, {}));
  ds.rounds.push_back(round("r_s1_seed", "s1", "2020-01-05", Stage::seed, {"inv_a"}));
  ds.rounds.push_back(round("r_s1_a", "s1", "2020-09-01", Stage::series_a, {"inv_a", "inv_b"}));
  ds.rounds.push_back(round("r_s2_seed", "s2", "2019-03-01", Stage::seed, {"inv_a", "inv_b"}));
  ds.rounds.push_back(round("r_s3_seed", "s3", "2019-06-01", Stage::seed, {"inv_b", "inv_c"}));
  ds.rounds.push_back(round("r_s4_seed", "s4", "2021-02-01", Stage::seed, {"inv_c"}));
  ds.finalize();
  return ds;
}

}  // namespace simvc::test
