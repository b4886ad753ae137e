#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "simvc/dataset_builder.hpp"
#include "simvc/errors.hpp"
#include "simvc/prng.hpp"

namespace simvc {

/// "YYYY-MM-DD..YYYY-MM-DD", inclusive on both ends.
inline DateRange parse_date_range(const std::string& text) {
  const auto at = text.find("..");
  if (at == std::string::npos) {
    throw InvalidConfig("date range must look like YYYY-MM-DD..YYYY-MM-DD, got: " + text);
  }
  const auto a = Date::parse(text.substr(0, at));
  const auto b = Date::parse(text.substr(at + 2));
  if (!a || !b) throw InvalidConfig("bad date in range: " + text);
  if (*b < *a) throw InvalidConfig("range end precedes start: " + text);
  return {*a, *b};
}

inline std::string hash_hex(uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot hash missing file " + path.string());
  uint64_t h = 0xcbf29ce484222325ull;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a64(std::string_view(buf, static_cast<size_t>(in.gcount())), h);
    if (in.eof()) break;
  }
  return hash_hex(h);
}

/// Run manifest written next to every artifact: enough to reproduce the run.
struct RunManifest {
  std::string command;
  json config;
  std::map<std::string, std::string> input_hashes;
  std::vector<std::string> outputs;
  uint64_t seed = 0;
  long duration_ms = 0;

  void add_input(const std::filesystem::path& p) {
    if (std::filesystem::is_directory(p)) {
      std::vector<std::filesystem::path> files;
      for (const auto& e : std::filesystem::directory_iterator(p)) {
        if (e.is_regular_file()) files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) input_hashes[f.string()] = file_hash(f);
    } else {
      input_hashes[p.string()] = file_hash(p);
    }
  }

  void write(const std::filesystem::path& path) const {
    json j = {{"manifest_version", 1},
              {"command", command},
              {"config", config},
              {"config_hash", hash_hex(fnv1a64(config.dump()))},
              {"input_hashes", input_hashes},
              {"outputs", outputs},
              {"seed", seed},
              {"duration_ms", duration_ms}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest " + path.string());
    out << j.dump(2) << "\n";
  }
};

/// Expands `--config FILE` (flat `key = value` lines, `#` comments) into
/// `--key=value` arguments for any key not already given explicitly, so
/// command-line flags always override file values. Returns the argument
/// list without the program name, in normal order.
inline std::vector<std::string> expand_config_args(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
      args.erase(args.begin() + long(i), args.begin() + long(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + long(i));
      break;
    }
  }
  if (config_path.empty()) return args;

  std::set<std::string> given;
  for (const auto& a : args) {
    if (a.rfind("--", 0) == 0) given.insert(a.substr(0, a.find('=')));
  }

  std::ifstream in(config_path);
  if (!in) throw IoError("cannot open config file " + config_path);
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidConfig(config_path + ":" + std::to_string(ln) + " expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw InvalidConfig(config_path + ":" + std::to_string(ln) + " empty key");
    }
    const std::string flag = "--" + key;
    if (!given.count(flag)) args.push_back(flag + "=" + value);
  }
  return args;
}

class Stopwatch {
public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  long elapsed_ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace simvc
