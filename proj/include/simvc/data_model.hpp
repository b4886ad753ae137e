#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "simvc/date.hpp"
#include "simvc/errors.hpp"

namespace simvc {

using json = nlohmann::json;

enum class Gender { male, female, other };

inline std::string to_string(Gender g) {
  switch (g) {
    case Gender::male: return "male";
    case Gender::female: return "female";
    default: return "other";
  }
}

inline std::optional<Gender> gender_from_string(const std::string& s) {
  if (s == "male") return Gender::male;
  if (s == "female") return Gender::female;
  if (s == "other") return Gender::other;
  return std::nullopt;
}

enum class Stage { seed, angel, series_a, other };

inline std::string to_string(Stage s) {
  switch (s) {
    case Stage::seed: return "seed";
    case Stage::angel: return "angel";
    case Stage::series_a: return "series_a";
    default: return "other";
  }
}

inline std::optional<Stage> stage_from_string(const std::string& s) {
  if (s == "seed") return Stage::seed;
  if (s == "angel") return Stage::angel;
  if (s == "series_a") return Stage::series_a;
  if (s == "other") return Stage::other;
  return std::nullopt;
}

inline bool is_early_stage(Stage s) { return s == Stage::seed || s == Stage::angel; }

/// One education or employment entry; dates optional, start <= end when both set.
struct DatedEntry {
  std::string org;   // institution or organization
  std::string role;  // degree or role
  std::optional<Date> start_date;
  std::optional<Date> end_date;

  bool well_formed() const {
    return !start_date || !end_date || *start_date <= *end_date;
  }
};

struct Person {
  std::string person_id;
  std::string name;
  std::optional<Gender> gender;
  std::vector<DatedEntry> education;
  std::vector<DatedEntry> employment;
};

struct Startup {
  std::string startup_id;
  Date founding_date;
  std::string industry;
  std::string description;
  std::string location;
  std::vector<std::string> products;
  std::vector<std::string> keywords;
  std::vector<std::string> team;  // person ids

  /// One-line digest used wherever another document mentions this startup.
  std::string name_line() const {
    return startup_id + " | industry: " + industry + " | founded " +
           founding_date.to_string();
  }
};

struct FundingRound {
  std::string round_id;
  std::string startup_id;
  Date round_date;
  Stage stage = Stage::other;
  std::optional<double> amount;
  std::vector<std::string> investor_ids;  // person ids
};

/// Round ordering within a startup: by date, ties broken by round id.
inline bool round_before(const FundingRound& a, const FundingRound& b) {
  if (a.round_date != b.round_date) return a.round_date < b.round_date;
  return a.round_id < b.round_id;
}

/// Immutable after ingestion; every pipeline stage reads it concurrently.
struct Dataset {
  std::map<std::string, Person> persons;
  std::map<std::string, Startup> startups;
  std::vector<FundingRound> rounds;  // sorted by (round_date, round_id)
  Date as_of;

  // Derived indexes, rebuilt by finalize().
  std::map<std::string, std::vector<size_t>> rounds_by_startup;   // ordered
  std::map<std::string, std::vector<size_t>> rounds_by_investor;  // ordered

  void finalize() {
    std::sort(rounds.begin(), rounds.end(), round_before);
    rounds_by_startup.clear();
    rounds_by_investor.clear();
    for (size_t i = 0; i < rounds.size(); ++i) {
      rounds_by_startup[rounds[i].startup_id].push_back(i);
      for (const auto& inv : rounds[i].investor_ids) {
        rounds_by_investor[inv].push_back(i);
      }
    }
  }

  const Startup& startup(const std::string& id) const {
    auto it = startups.find(id);
    if (it == startups.end()) throw UnknownStartup(id);
    return it->second;
  }

  const Person& person(const std::string& id) const {
    auto it = persons.find(id);
    if (it == persons.end()) throw UnknownPerson(id);
    return it->second;
  }

  /// Investors of rounds for `startup_id` dated <= cutoff, in round order.
  std::set<std::string> historical_investors(const std::string& id, Date cutoff) const {
    std::set<std::string> out;
    auto it = rounds_by_startup.find(id);
    if (it == rounds_by_startup.end()) return out;
    for (size_t idx : it->second) {
      const auto& r = rounds[idx];
      if (r.round_date <= cutoff) out.insert(r.investor_ids.begin(), r.investor_ids.end());
    }
    return out;
  }
};

struct IngestDiagnostic {
  std::string file;
  int line = 0;  // 1-based; 0 when the problem is cross-record
  std::string kind;
  std::string message;

  std::string str() const {
    return file + ":" + std::to_string(line) + " [" + kind + "] " + message;
  }
};

struct IngestReport {
  Dataset dataset;
  std::vector<IngestDiagnostic> rejected;        // invariant-violating records
  std::vector<IngestDiagnostic> excluded_after_cutoff;  // temporal anti-leakage
};

namespace detail {

inline std::optional<Date> json_date(const json& j, const char* field) {
  if (!j.contains(field) || j[field].is_null()) return std::nullopt;
  if (!j[field].is_string()) return std::nullopt;
  return Date::parse(j[field].get<std::string>());
}

inline std::vector<DatedEntry> json_entries(const json& j, const char* field,
                                            const char* org_key, const char* role_key,
                                            bool& ok) {
  std::vector<DatedEntry> out;
  if (!j.contains(field)) return out;
  if (!j[field].is_array()) {
    ok = false;
    return out;
  }
  for (const auto& e : j[field]) {
    DatedEntry d;
    if (!e.is_object() || !e.contains(org_key) || !e.contains(role_key)) {
      ok = false;
      return out;
    }
    d.org = e[org_key].get<std::string>();
    d.role = e[role_key].get<std::string>();
    if (e.contains("start_date") && !e["start_date"].is_null()) {
      d.start_date = json_date(e, "start_date");
      if (!d.start_date) ok = false;
    }
    if (e.contains("end_date") && !e["end_date"].is_null()) {
      d.end_date = json_date(e, "end_date");
      if (!d.end_date) ok = false;
    }
    if (!d.well_formed()) ok = false;
    out.push_back(std::move(d));
  }
  return out;
}

inline json entries_to_json(const std::vector<DatedEntry>& entries, const char* org_key,
                            const char* role_key) {
  json arr = json::array();
  for (const auto& e : entries) {
    json o;
    o[org_key] = e.org;
    o[role_key] = e.role;
    o["start_date"] = e.start_date ? json(e.start_date->to_string()) : json(nullptr);
    o["end_date"] = e.end_date ? json(e.end_date->to_string()) : json(nullptr);
    arr.push_back(std::move(o));
  }
  return arr;
}

}  // namespace detail

inline json to_json(const Person& p) {
  json j;
  j["person_id"] = p.person_id;
  j["name"] = p.name;
  j["gender"] = p.gender ? json(to_string(*p.gender)) : json(nullptr);
  j["education"] = detail::entries_to_json(p.education, "institution", "degree");
  j["employment"] = detail::entries_to_json(p.employment, "organization", "role");
  return j;
}

inline json to_json(const Startup& s) {
  json j;
  j["startup_id"] = s.startup_id;
  j["founding_date"] = s.founding_date.to_string();
  j["industry"] = s.industry;
  j["description"] = s.description;
  j["location"] = s.location;
  j["products"] = s.products;
  j["keywords"] = s.keywords;
  j["team"] = s.team;
  return j;
}

inline json to_json(const FundingRound& r) {
  json j;
  j["round_id"] = r.round_id;
  j["startup_id"] = r.startup_id;
  j["round_date"] = r.round_date.to_string();
  j["stage"] = to_string(r.stage);
  j["amount"] = r.amount ? json(*r.amount) : json(nullptr);
  j["investor_ids"] = r.investor_ids;
  return j;
}

/// Ingest the canonical JSONL bundle (persons.jsonl, startups.jsonl,
/// rounds.jsonl under `path`). Structural violations are rejected with a
/// line-numbered diagnostic; in strict mode (the default) any rejection is
/// rethrown as the matching typed error after the full scan. Records dated
/// after `as_of` are excluded and logged, never an error.
inline IngestReport ingest_report(const std::filesystem::path& path, Date as_of,
                                  bool strict = true) {
  IngestReport rep;
  Dataset& ds = rep.dataset;
  ds.as_of = as_of;

  auto reject = [&](const std::string& file, int line, const std::string& kind,
                    const std::string& msg) {
    rep.rejected.push_back({file, line, kind, msg});
  };

  auto for_each_line = [&](const std::string& file, auto&& fn) {
    std::ifstream in(path / file);
    if (!in) throw IoError("cannot open " + (path / file).string());
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
      ++ln;
      if (line.empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        reject(file, ln, "MalformedRecord", "invalid JSON object");
        continue;
      }
      fn(j, ln);
    }
  };

  for_each_line("persons.jsonl", [&](const json& j, int ln) {
    if (!j.contains("person_id") || !j["person_id"].is_string() || !j.contains("name")) {
      reject("persons.jsonl", ln, "MalformedRecord", "missing person_id/name");
      return;
    }
    Person p;
    p.person_id = j["person_id"].get<std::string>();
    p.name = j.value("name", "");
    if (j.contains("gender") && !j["gender"].is_null()) {
      p.gender = gender_from_string(j["gender"].get<std::string>());
      if (!p.gender) {
        reject("persons.jsonl", ln, "MalformedRecord", "bad gender for " + p.person_id);
        return;
      }
    }
    bool ok = true;
    p.education = detail::json_entries(j, "education", "institution", "degree", ok);
    p.employment = detail::json_entries(j, "employment", "organization", "role", ok);
    if (!ok) {
      reject("persons.jsonl", ln, "MalformedRecord", "bad entry list for " + p.person_id);
      return;
    }
    if (ds.persons.count(p.person_id)) {
      reject("persons.jsonl", ln, "MalformedRecord", "duplicate person_id " + p.person_id);
      return;
    }
    ds.persons.emplace(p.person_id, std::move(p));
  });

  for_each_line("startups.jsonl", [&](const json& j, int ln) {
    for (const char* f : {"startup_id", "founding_date", "industry", "description",
                          "location", "products", "keywords", "team"}) {
      if (!j.contains(f)) {
        reject("startups.jsonl", ln, "MalformedRecord", std::string("missing field ") + f);
        return;
      }
    }
    auto fd = detail::json_date(j, "founding_date");
    if (!fd) {
      reject("startups.jsonl", ln, "MalformedRecord", "bad founding_date");
      return;
    }
    Startup s;
    s.startup_id = j["startup_id"].get<std::string>();
    s.founding_date = *fd;
    s.industry = j["industry"].get<std::string>();
    s.description = j["description"].get<std::string>();
    s.location = j["location"].get<std::string>();
    s.products = j["products"].get<std::vector<std::string>>();
    s.keywords = j["keywords"].get<std::vector<std::string>>();
    s.team = j["team"].get<std::vector<std::string>>();
    if (ds.startups.count(s.startup_id)) {
      reject("startups.jsonl", ln, "MalformedRecord", "duplicate startup_id " + s.startup_id);
      return;
    }
    if (s.founding_date > as_of) {
      rep.excluded_after_cutoff.push_back(
          {"startups.jsonl", ln, "AfterCutoff", s.startup_id + " founded after as_of"});
      return;
    }
    ds.startups.emplace(s.startup_id, std::move(s));
  });

  for_each_line("rounds.jsonl", [&](const json& j, int ln) {
    for (const char* f : {"round_id", "startup_id", "round_date", "stage", "investor_ids"}) {
      if (!j.contains(f)) {
        reject("rounds.jsonl", ln, "MalformedRecord", std::string("missing field ") + f);
        return;
      }
    }
    auto rd = detail::json_date(j, "round_date");
    auto stage = j["stage"].is_string()
                     ? stage_from_string(j["stage"].get<std::string>())
                     : std::nullopt;
    if (!rd || !stage) {
      reject("rounds.jsonl", ln, "MalformedRecord", "bad round_date or stage");
      return;
    }
    FundingRound r;
    r.round_id = j["round_id"].get<std::string>();
    r.startup_id = j["startup_id"].get<std::string>();
    r.round_date = *rd;
    r.stage = *stage;
    if (j.contains("amount") && !j["amount"].is_null()) {
      const double a = j["amount"].get<double>();
      if (a < 0) {
        reject("rounds.jsonl", ln, "MalformedRecord", "negative amount in " + r.round_id);
        return;
      }
      r.amount = a;
    }
    r.investor_ids = j["investor_ids"].get<std::vector<std::string>>();
    if (r.investor_ids.empty()) {
      reject("rounds.jsonl", ln, "MalformedRecord", "empty investor_ids in " + r.round_id);
      return;
    }
    if (r.round_date > as_of) {
      rep.excluded_after_cutoff.push_back(
          {"rounds.jsonl", ln, "AfterCutoff", r.round_id + " dated after as_of"});
      return;
    }
    auto su = ds.startups.find(r.startup_id);
    if (su == ds.startups.end()) {
      reject("rounds.jsonl", ln, "DanglingReference",
             "round " + r.round_id + " references unknown startup_id " + r.startup_id);
      return;
    }
    for (const auto& inv : r.investor_ids) {
      if (!ds.persons.count(inv)) {
        reject("rounds.jsonl", ln, "DanglingReference",
               "round " + r.round_id + " references unknown person_id " + inv);
        return;
      }
    }
    if (r.round_date < su->second.founding_date) {
      reject("rounds.jsonl", ln, "TemporalViolation",
             "round " + r.round_id + " predates founding of " + r.startup_id);
      return;
    }
    ds.rounds.push_back(std::move(r));
  });

  // Team members must resolve; team entries are part of the startup record,
  // so the diagnostic points at the startup file.
  std::vector<std::string> drop;
  for (const auto& [id, s] : ds.startups) {
    for (const auto& member : s.team) {
      if (!ds.persons.count(member)) {
        reject("startups.jsonl", 0, "DanglingReference",
               "startup " + id + " references unknown person_id " + member);
        drop.push_back(id);
        break;
      }
    }
  }
  for (const auto& id : drop) ds.startups.erase(id);

  if (strict && !rep.rejected.empty()) {
    std::string all;
    for (const auto& d : rep.rejected) all += d.str() + "\n";
    const std::string& kind = rep.rejected.front().kind;
    if (kind == "DanglingReference") throw DanglingReference(all);
    if (kind == "TemporalViolation") throw TemporalViolation(all);
    throw MalformedRecord(all);
  }

  ds.finalize();
  return rep;
}

inline Dataset ingest(const std::filesystem::path& path, Date as_of) {
  return ingest_report(path, as_of, /*strict=*/true).dataset;
}

/// Writes the canonical JSONL bundle. ingest(serialize(ds), ds.as_of)
/// round-trips to an equal dataset.
inline void serialize(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "persons.jsonl");
    for (const auto& [id, p] : ds.persons) out << to_json(p).dump() << "\n";
  }
  {
    std::ofstream out(dir / "startups.jsonl");
    for (const auto& [id, s] : ds.startups) out << to_json(s).dump() << "\n";
  }
  {
    std::ofstream out(dir / "rounds.jsonl");
    for (const auto& r : ds.rounds) out << to_json(r).dump() << "\n";
  }
}

/// Earliest seed/angel round by (round_date, round_id).
inline const FundingRound& first_round(const Dataset& ds, const std::string& startup_id) {
  auto it = ds.rounds_by_startup.find(startup_id);
  if (it != ds.rounds_by_startup.end()) {
    for (size_t idx : it->second) {  // rounds are pre-sorted
      if (is_early_stage(ds.rounds[idx].stage)) return ds.rounds[idx];
    }
  }
  throw NoQualifyingRound(startup_id + " has no seed/angel round");
}

/// True iff a later round (any stage) lands in (first, first + horizon_days].
inline bool label_followon(const Dataset& ds, const std::string& startup_id,
                           int horizon_days = 365) {
  const FundingRound& first = first_round(ds, startup_id);
  if (ds.as_of < first.round_date.add_days(horizon_days)) {
    throw LabelNotObservable(startup_id + ": as_of " + ds.as_of.to_string() +
                             " precedes " + first.round_date.add_days(horizon_days).to_string());
  }
  const Date lo = first.round_date;
  const Date hi = first.round_date.add_days(horizon_days);
  auto it = ds.rounds_by_startup.find(startup_id);
  for (size_t idx : it->second) {
    const Date d = ds.rounds[idx].round_date;
    if (d > lo && d <= hi) return true;
  }
  return false;
}

inline bool datasets_equal(const Dataset& a, const Dataset& b) {
  if (a.persons.size() != b.persons.size() || a.startups.size() != b.startups.size() ||
      a.rounds.size() != b.rounds.size()) {
    return false;
  }
  for (const auto& [id, p] : a.persons) {
    auto it = b.persons.find(id);
    if (it == b.persons.end() || to_json(p) != to_json(it->second)) return false;
  }
  for (const auto& [id, s] : a.startups) {
    auto it = b.startups.find(id);
    if (it == b.startups.end() || to_json(s) != to_json(it->second)) return false;
  }
  for (size_t i = 0; i < a.rounds.size(); ++i) {
    if (to_json(a.rounds[i]) != to_json(b.rounds[i])) return false;
  }
  return true;
}

}  // namespace simvc
