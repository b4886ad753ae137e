#pragma once

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "simvc/data_model.hpp"

namespace simvc {

struct StartupProfile {
  std::string startup_id;
  Date cutoff;
  std::string text;
  json structured;
};

struct InvestorProfile {
  std::string person_id;
  Date cutoff;
  std::string text;
  json structured;
};

namespace detail {

inline std::string join(const std::vector<std::string>& items, const char* sep = ", ") {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

inline std::string amount_str(const std::optional<double>& amount) {
  if (!amount) return "undisclosed";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "$%.2fM", *amount / 1e6);
  return buf;
}

/// One-line summary of a startup, used for investment-experience entries.
/// Keeps keywords out on purpose: the startup portrait must carry exactly one
/// "Keywords:" line of its own.
inline std::string startup_one_liner(const Startup& s) {
  return s.name_line();
}

}  // namespace detail

/// Four-section panoramic portrait of a startup, truncated at `cutoff`.
/// Pure function of (dataset, id, cutoff); identical inputs render
/// byte-identical text.
inline StartupProfile render_startup_portrait(const Dataset& ds, const std::string& startup_id,
                                              Date cutoff) {
  const Startup& s = ds.startup(startup_id);
  std::ostringstream out;
  json body;

  out << "# Startup Profile: " << s.startup_id << "\n\n";

  out << "## Basic Information\n";
  out << "Founded: " << s.founding_date.to_string() << "\n";
  out << "Industry: " << s.industry << "\n";
  out << "Location: " << s.location << "\n";
  out << "Description: " << s.description << "\n";
  out << "Products: " << (s.products.empty() ? "none recorded" : detail::join(s.products))
      << "\n";
  out << "Keywords: " << (s.keywords.empty() ? "none recorded" : detail::join(s.keywords))
      << "\n";
  body["basic"] = {{"startup_id", s.startup_id},
                   {"founding_date", s.founding_date.to_string()},
                   {"industry", s.industry},
                   {"location", s.location},
                   {"description", s.description},
                   {"products", s.products},
                   {"keywords", s.keywords}};

  out << "\n## Team Composition\n";
  json team = json::array();
  if (s.team.empty()) out << "none recorded\n";
  for (const auto& member_id : s.team) {
    const Person& p = ds.person(member_id);
    out << "- " << p.name << " (" << p.person_id << ")";
    if (p.gender) out << ", " << to_string(*p.gender);
    std::vector<std::string> edu;
    for (const auto& e : p.education) {
      if (e.start_date && *e.start_date > cutoff) continue;
      edu.push_back(e.role + " @ " + e.org);
    }
    if (!edu.empty()) out << "; education: " << detail::join(edu);
    std::vector<std::string> jobs;
    for (const auto& e : p.employment) {
      if (e.start_date && *e.start_date > cutoff) continue;
      jobs.push_back(e.role + " @ " + e.org);
    }
    if (!jobs.empty()) out << "; employment: " << detail::join(jobs);
    size_t invested = 0;
    if (auto it = ds.rounds_by_investor.find(member_id); it != ds.rounds_by_investor.end()) {
      for (size_t idx : it->second) {
        if (ds.rounds[idx].round_date <= cutoff) ++invested;
      }
    }
    if (invested > 0) out << "; personal investments: " << invested;
    out << "\n";
    team.push_back({{"person_id", p.person_id}, {"name", p.name}});
  }
  body["team"] = team;

  out << "\n## Historical Financing Records\n";
  json fins = json::array();
  bool any_round = false;
  if (auto it = ds.rounds_by_startup.find(startup_id); it != ds.rounds_by_startup.end()) {
    for (size_t idx : it->second) {
      const FundingRound& r = ds.rounds[idx];
      if (r.round_date > cutoff) continue;
      any_round = true;
      std::vector<std::string> names;
      for (const auto& inv : r.investor_ids) names.push_back(ds.person(inv).name + " (" + inv + ")");
      out << "- " << r.round_date.to_string() << " | " << to_string(r.stage) << " | "
          << detail::amount_str(r.amount) << " | investors: " << detail::join(names) << "\n";
      fins.push_back({{"round_id", r.round_id},
                      {"date", r.round_date.to_string()},
                      {"stage", to_string(r.stage)},
                      {"investors", r.investor_ids}});
    }
  }
  if (!any_round) out << "none recorded\n";
  body["financing"] = fins;

  // Affiliates: any startup founded by cutoff that shares a team member or a
  // historical investor with the target, all links evaluated at cutoff.
  out << "\n## Affiliated Companies\n";
  const std::set<std::string> target_investors = ds.historical_investors(startup_id, cutoff);
  const std::set<std::string> target_team(s.team.begin(), s.team.end());
  json affs = json::array();
  bool any_aff = false;
  for (const auto& [oid, other] : ds.startups) {
    if (oid == startup_id || other.founding_date > cutoff) continue;
    std::vector<std::string> shared_team;
    for (const auto& m : other.team) {
      if (target_team.count(m)) shared_team.push_back(ds.person(m).name);
    }
    std::vector<std::string> shared_inv;
    for (const auto& inv : ds.historical_investors(oid, cutoff)) {
      if (target_investors.count(inv)) shared_inv.push_back(ds.person(inv).name);
    }
    if (shared_team.empty() && shared_inv.empty()) continue;
    any_aff = true;
    out << "- " << other.name_line();
    if (!shared_team.empty()) out << " | shared team: " << detail::join(shared_team);
    if (!shared_inv.empty()) out << " | shared investors: " << detail::join(shared_inv);
    out << "\n";
    affs.push_back({{"startup_id", oid},
                    {"shared_team", shared_team},
                    {"shared_investors", shared_inv}});
  }
  if (!any_aff) out << "none recorded\n";
  body["affiliates"] = affs;

  StartupProfile prof;
  prof.startup_id = startup_id;
  prof.cutoff = cutoff;
  prof.text = out.str();
  prof.structured = std::move(body);
  return prof;
}

/// Investor portrait: personal info, early-stage vs other investment
/// experience (each entry with a one-line summary of the invested startup,
/// including its keywords), and an employment timeline. Events after
/// `cutoff` are omitted.
inline InvestorProfile render_investor_portrait(const Dataset& ds, const std::string& person_id,
                                                Date cutoff) {
  const Person& p = ds.person(person_id);
  std::ostringstream out;
  json body;

  out << "# Investor Profile: " << p.name << " (" << p.person_id << ")\n\n";

  out << "## Personal Information\n";
  out << "Name: " << p.name << "\n";
  out << "Gender: " << (p.gender ? to_string(*p.gender) : "unspecified") << "\n";
  std::vector<std::string> edu;
  for (const auto& e : p.education) {
    if (e.start_date && *e.start_date > cutoff) continue;
    edu.push_back(e.role + " @ " + e.org);
  }
  out << "Education: " << (edu.empty() ? "none recorded" : detail::join(edu)) << "\n";
  body["personal"] = {{"person_id", p.person_id},
                      {"name", p.name},
                      {"gender", p.gender ? to_string(*p.gender) : "unspecified"},
                      {"education", edu}};

  out << "\n## Past Investment Experience\n";
  json early = json::array(), later = json::array();
  std::ostringstream early_txt, other_txt;
  if (auto it = ds.rounds_by_investor.find(person_id); it != ds.rounds_by_investor.end()) {
    for (size_t idx : it->second) {
      const FundingRound& r = ds.rounds[idx];
      if (r.round_date > cutoff) continue;
      const Startup& su = ds.startup(r.startup_id);
      std::ostringstream line;
      line << "- " << r.round_date.to_string() << " | " << to_string(r.stage) << " | "
           << su.startup_id << " | industry: " << su.industry << " | keywords: "
           << (su.keywords.empty() ? "none" : detail::join(su.keywords)) << " | "
           << detail::amount_str(r.amount) << "\n";
      json entry = {{"round_id", r.round_id},
                    {"date", r.round_date.to_string()},
                    {"stage", to_string(r.stage)},
                    {"startup_id", su.startup_id},
                    {"keywords", su.keywords}};
      const bool early_stage = r.stage != Stage::other;  // seed/angel/series_a
      (early_stage ? early_txt : other_txt) << line.str();
      (early_stage ? early : later).push_back(std::move(entry));
    }
  }
  out << "### Early-stage investments\n";
  out << (early.empty() ? std::string("none recorded\n") : early_txt.str());
  out << "### Other investments\n";
  out << (later.empty() ? std::string("none recorded\n") : other_txt.str());
  body["early_stage_investments"] = early;
  body["other_investments"] = later;

  out << "\n## Employment History\n";
  json jobs = json::array();
  std::vector<const DatedEntry*> ordered;
  for (const auto& e : p.employment) {
    if (e.start_date && *e.start_date > cutoff) continue;
    ordered.push_back(&e);
  }
  std::stable_sort(ordered.begin(), ordered.end(), [](const DatedEntry* a, const DatedEntry* b) {
    const int da = a->start_date ? a->start_date->days() : INT32_MIN;
    const int db = b->start_date ? b->start_date->days() : INT32_MIN;
    return da < db;
  });
  if (ordered.empty()) out << "none recorded\n";
  for (const DatedEntry* e : ordered) {
    const std::string start = e->start_date ? e->start_date->to_string() : "unknown";
    const std::string end =
        (e->end_date && *e->end_date <= cutoff) ? e->end_date->to_string() : "ongoing";
    out << "- " << start << " to " << end << " | " << e->role << " @ " << e->org << "\n";
    jobs.push_back({{"organization", e->org}, {"role", e->role}, {"start", start}, {"end", end}});
  }
  body["employment"] = jobs;

  InvestorProfile prof;
  prof.person_id = person_id;
  prof.cutoff = cutoff;
  prof.text = out.str();
  prof.structured = std::move(body);
  return prof;
}

}  // namespace simvc
