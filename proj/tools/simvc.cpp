// simvc — command-line front end for the co-investment simulation pipeline.
//
// Subcommands: synth | ingest | build-dataset | train-vgat | simulate |
// evaluate | ablate | consistency | graph-stats. Every subcommand writes its
// artifacts plus a .manifest.json with the effective config, input hashes,
// seed and timings. Flags can come from a flat key=value config file via
// --config; command-line flags override file values.

#define SIMVC_ENABLE_HTTP 1

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <memory>

#include "simvc/agents.hpp"
#include "simvc/dataset_builder.hpp"
#include "simvc/encoder.hpp"
#include "simvc/evaluation.hpp"
#include "simvc/graph.hpp"
#include "simvc/llm.hpp"
#include "simvc/run_config.hpp"
#include "simvc/synth.hpp"
#include "simvc/training.hpp"

namespace fs = std::filesystem;
using namespace simvc;

namespace {

struct BackendOptions {
  std::string backend = "scripted";
  double scripted_influence = 1.0;
  int overlap_threshold = 2;
  int coherence_threshold = 3;
  double noisy_flip = 0.0;
  std::string llm_endpoint;
  std::string llm_model;

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--backend", backend, "LLM backend: scripted | http")
        ->check(CLI::IsMember({"scripted", "http"}))
        ->capture_default_str();
    cmd->add_option("--scripted-influence", scripted_influence,
                    "peer influence weight of the scripted backend (0 disables flips)")
        ->capture_default_str();
    cmd->add_option("--scripted-overlap", overlap_threshold,
                    "keyword overlaps required for a scripted INVEST")
        ->capture_default_str();
    cmd->add_option("--noisy-flip", noisy_flip,
                    "flip the decision token with this probability per call (testing)")
        ->capture_default_str();
    cmd->add_option("--llm-endpoint", llm_endpoint,
                    "chat endpoint URL (or env SIMVC_LLM_ENDPOINT)");
    cmd->add_option("--llm-model", llm_model, "chat model name (or env SIMVC_LLM_MODEL)");
  }

  BackendFactory factory(uint64_t seed) const {
    if (backend == "http") {
      HttpChatConfig cfg = HttpChatConfig::from_env();
      if (!llm_endpoint.empty()) cfg.endpoint = llm_endpoint;
      if (!llm_model.empty()) cfg.model = llm_model;
      auto shared = std::make_shared<HttpChatBackend>(cfg);
      return [shared](const std::string&, int) { return shared; };
    }
    ScriptedBackendConfig cfg;
    cfg.peer_influence = scripted_influence;
    cfg.overlap_threshold = overlap_threshold;
    cfg.coherence_threshold = coherence_threshold;
    auto scripted = std::make_shared<ScriptedBackend>(cfg);
    const double flip = noisy_flip;
    if (flip <= 0.0) {
      return [scripted](const std::string&, int) { return scripted; };
    }
    return [scripted, flip, seed](const std::string& startup, int run) {
      return std::make_shared<NoisyBackend>(
          scripted, flip, mix_seed(seed, "noise:" + startup + ":" + std::to_string(run)));
    };
  }

  json snapshot() const {
    return {{"backend", backend},
            {"scripted_influence", scripted_influence},
            {"scripted_overlap", overlap_threshold},
            {"noisy_flip", noisy_flip},
            {"llm_model", llm_model}};
  }
};

struct DataOptions {
  std::string data_dir;
  std::string as_of;

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--data", data_dir, "directory with the JSONL bundle")->required();
    cmd->add_option("--as-of", as_of, "dataset cutoff date YYYY-MM-DD")->required();
  }

  Dataset load(std::vector<std::string>& problems) const {
    const auto date = Date::parse(as_of);
    if (!date) {
      problems.push_back("--as-of is not a valid ISO date: " + as_of);
      return {};
    }
    return ingest(data_dir, *date);
  }
};

void fail_all(const std::vector<std::string>& problems) {
  if (problems.empty()) return;
  json j = {{"error", "InvalidConfig"}, {"problems", problems}};
  std::cerr << j.dump(2) << "\n";
  std::exit(2);
}

std::unique_ptr<TextEncoder> make_encoder(const std::string& kind, int d_enc) {
  if (kind == "http") return std::make_unique<HttpEncoder>(HttpEncoderConfig::from_env(size_t(d_enc)));
  return std::make_unique<HashingEncoder>(size_t(d_enc));
}

PromptTemplates load_templates(const std::string& dir) {
  return dir.empty() ? PromptTemplates::defaults() : PromptTemplates::load(dir);
}

std::vector<CohortEntry> cohort_from_window(const Dataset& ds, const std::string& window,
                                            int horizon) {
  return build_test_cohort(ds, parse_date_range(window), horizon);
}

int run_cli(int argc, char** argv) {
  CLI::App app{"SimVC collective-agent pipeline"};
  app.require_subcommand(1);
  app.footer(
      "Every subcommand also accepts --config FILE holding flat `key = value` lines\n"
      "(keys are the long option names without dashes); explicit flags override file values.");

  // ---- synth ---------------------------------------------------------------
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic VC ecosystem bundle");
  std::string synth_out = "synth_data";
  synth::SynthConfig synth_cfg;
  synth_cmd->add_option("--out", synth_out, "output bundle directory")->capture_default_str();
  synth_cmd->add_option("--n-startups", synth_cfg.n_startups)->capture_default_str();
  synth_cmd->add_option("--n-investors", synth_cfg.n_investors)->capture_default_str();
  synth_cmd->add_option("--taste-dim", synth_cfg.taste_dim)->capture_default_str();
  synth_cmd->add_option("--quality-noise", synth_cfg.quality_noise)->capture_default_str();
  synth_cmd->add_option("--peer-influence", synth_cfg.peer_influence_strength)
      ->capture_default_str();
  synth_cmd->add_option("--rate", synth_cfg.base_followon_rate, "base follow-on rate")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth_cfg.seed)->capture_default_str();
  synth_cmd->callback([&] {
    Stopwatch watch;
    const auto result = synth::generate(synth_cfg);
    synth::write_bundle(result, synth_out);
    RunManifest m;
    m.command = "synth";
    m.config = {{"n_startups", synth_cfg.n_startups},
                {"n_investors", synth_cfg.n_investors},
                {"taste_dim", synth_cfg.taste_dim},
                {"quality_noise", synth_cfg.quality_noise},
                {"peer_influence_strength", synth_cfg.peer_influence_strength},
                {"base_followon_rate", synth_cfg.base_followon_rate}};
    m.seed = synth_cfg.seed;
    m.duration_ms = watch.elapsed_ms();
    for (const char* f : {"persons.jsonl", "startups.jsonl", "rounds.jsonl", "truth.json"}) {
      m.outputs.push_back((fs::path(synth_out) / f).string());
    }
    m.write(fs::path(synth_out) / "synth.manifest.json");
    std::cout << "wrote bundle to " << synth_out << " (" << result.dataset.startups.size()
              << " startups, " << result.dataset.persons.size() << " persons, "
              << result.dataset.rounds.size() << " rounds; as_of "
              << result.dataset.as_of.to_string() << ")\n";
  });

  // ---- ingest ----------------------------------------------------------------
  auto* ingest_cmd = app.add_subcommand("ingest", "validate a JSONL bundle");
  DataOptions ingest_data;
  bool lenient = false;
  std::string ingest_report_path = "ingest_report.json";
  ingest_data.add_flags(ingest_cmd);
  ingest_cmd->add_flag("--lenient", lenient, "reject bad records instead of failing");
  ingest_cmd->add_option("--report", ingest_report_path)->capture_default_str();
  ingest_cmd->callback([&] {
    std::vector<std::string> problems;
    const auto date = Date::parse(ingest_data.as_of);
    if (!date) problems.push_back("--as-of is not a valid ISO date");
    fail_all(problems);
    Stopwatch watch;
    const auto rep = ingest_report(ingest_data.data_dir, *date, /*strict=*/!lenient);
    json diags = json::array();
    for (const auto& d : rep.rejected) diags.push_back(d.str());
    json excluded = json::array();
    for (const auto& d : rep.excluded_after_cutoff) excluded.push_back(d.str());
    json j = {{"persons", rep.dataset.persons.size()},
              {"startups", rep.dataset.startups.size()},
              {"rounds", rep.dataset.rounds.size()},
              {"rejected", diags},
              {"excluded_after_cutoff", excluded}};
    std::ofstream out(ingest_report_path);
    out << j.dump(2) << "\n";
    RunManifest m;
    m.command = "ingest";
    m.config = {{"data", ingest_data.data_dir}, {"as_of", ingest_data.as_of},
                {"lenient", lenient}};
    m.add_input(ingest_data.data_dir);
    m.outputs.push_back(ingest_report_path);
    m.duration_ms = watch.elapsed_ms();
    m.write(ingest_report_path + ".manifest.json");
    std::cout << j.dump(2) << "\n";
  });

  // ---- build-dataset ---------------------------------------------------------
  auto* build_cmd = app.add_subcommand("build-dataset", "build temporally split training graphs");
  DataOptions build_data;
  build_data.add_flags(build_cmd);
  std::string build_out = "graphs";
  std::string train_window, val_window, test_window;
  std::vector<int> k_values = {10, 20, 30};
  double min_ratio = 0.05;
  int horizon_days = 365;
  int d_enc = 128;
  std::string encoder_kind = "hashing";
  uint64_t build_seed = 1;
  build_cmd->add_option("--out", build_out)->capture_default_str();
  build_cmd->add_option("--train-window", train_window, "YYYY-MM-DD..YYYY-MM-DD")->required();
  build_cmd->add_option("--val-window", val_window)->required();
  build_cmd->add_option("--test-window", test_window)->required();
  build_cmd->add_option("--k-values", k_values)->capture_default_str();
  build_cmd->add_option("--min-ratio", min_ratio, "pos/neg ratio floor")->capture_default_str();
  build_cmd->add_option("--horizon-days", horizon_days)->capture_default_str();
  build_cmd->add_option("--d-enc", d_enc)->capture_default_str();
  build_cmd->add_option("--encoder", encoder_kind)->check(CLI::IsMember({"hashing", "http"}));
  build_cmd->add_option("--seed", build_seed)->capture_default_str();
  build_cmd->callback([&] {
    std::vector<std::string> problems;
    SplitSpec spec;
    try {
      spec.train_window = parse_date_range(train_window);
      spec.val_window = parse_date_range(val_window);
      spec.test_window = parse_date_range(test_window);
      spec.k_values = k_values;
      spec.min_pos_neg_ratio = min_ratio;
      spec.horizon_days = horizon_days;
      spec.validate();
    } catch (const InvalidConfig& e) {
      problems.push_back(e.what());
    }
    auto ds = build_data.load(problems);
    fail_all(problems);
    Stopwatch watch;
    auto encoder = make_encoder(encoder_kind, d_enc);
    const auto graphs = build_training_graphs(ds, spec, *encoder, build_seed);
    fs::create_directories(build_out);
    write_graph_bundle(graphs.train, fs::path(build_out) / "graphs_train.jsonl");
    write_graph_bundle(graphs.val, fs::path(build_out) / "graphs_val.jsonl");
    write_graph_bundle(graphs.test, fs::path(build_out) / "graphs_test.jsonl");
    json split = {{"train", graphs.train_stats.to_json()},
                  {"val", graphs.val_stats.to_json()},
                  {"test", graphs.test_stats.to_json()},
                  {"k_values", k_values},
                  {"min_pos_neg_ratio", min_ratio},
                  {"seed", build_seed}};
    {
      std::ofstream out(fs::path(build_out) / "split_manifest.json");
      out << split.dump(2) << "\n";
    }
    RunManifest m;
    m.command = "build-dataset";
    m.config = split;
    m.config["d_enc"] = d_enc;
    m.add_input(build_data.data_dir);
    m.seed = build_seed;
    m.duration_ms = watch.elapsed_ms();
    for (const char* f : {"graphs_train.jsonl", "graphs_val.jsonl", "graphs_test.jsonl"}) {
      m.outputs.push_back((fs::path(build_out) / f).string());
    }
    m.write(fs::path(build_out) / "build.manifest.json");
    std::cout << split.dump(2) << "\n";
  });

  // ---- train-vgat --------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train-vgat", "train VGAT (or the GAT baseline)");
  std::string graphs_dir = "graphs";
  std::string model_kind = "vgat";
  std::string checkpoint_out = "vgat_checkpoint.json";
  std::string log_out;
  TrainConfig tcfg;
  int train_d_model = 64;
  train_cmd->add_option("--graphs", graphs_dir, "directory from build-dataset")
      ->capture_default_str();
  train_cmd->add_option("--model", model_kind)->check(CLI::IsMember({"vgat", "gat"}));
  train_cmd->add_option("--out", checkpoint_out)->capture_default_str();
  train_cmd->add_option("--log", log_out, "training log JSONL path");
  train_cmd->add_option("--lr", tcfg.lr)->capture_default_str();
  train_cmd->add_option("--weight-decay", tcfg.weight_decay)->capture_default_str();
  train_cmd->add_option("--alpha", tcfg.alpha_contrast)->capture_default_str();
  train_cmd->add_option("--d-model", train_d_model)->capture_default_str();
  train_cmd->add_option("--max-epochs", tcfg.max_epochs)->capture_default_str();
  train_cmd->add_option("--patience", tcfg.patience)->capture_default_str();
  train_cmd->add_option("--min-ratio", tcfg.min_pos_neg_ratio)->capture_default_str();
  train_cmd->add_option("--seed", tcfg.seed)->capture_default_str();
  train_cmd->callback([&] {
    Stopwatch watch;
    const auto train_graphs = load_graph_bundle(fs::path(graphs_dir) / "graphs_train.jsonl");
    const auto val_graphs = load_graph_bundle(fs::path(graphs_dir) / "graphs_val.jsonl");
    if (train_graphs.empty()) throw EmptyWindow("no training graphs in " + graphs_dir);
    const int d_enc_found = static_cast<int>(train_graphs.front().numeric.features.cols());
    json summary;
    if (model_kind == "vgat") {
      auto result = train(init_vgat(d_enc_found, train_d_model, tcfg.seed),
                          numeric_graphs(train_graphs), numeric_graphs(val_graphs), tcfg);
      save_checkpoint(result.params, checkpoint_out);
      if (!log_out.empty()) write_training_log(result.log, log_out);
      summary = {{"best_epoch", result.best_epoch}, {"best_val_f1", result.best_val_f1},
                 {"epochs_run", result.log.size()}};
    } else {
      auto result = train(init_gat_baseline(d_enc_found, train_d_model, tcfg.seed),
                          numeric_graphs(train_graphs), numeric_graphs(val_graphs), tcfg);
      save_checkpoint(result.params, checkpoint_out);
      if (!log_out.empty()) write_training_log(result.log, log_out);
      summary = {{"best_epoch", result.best_epoch}, {"best_val_f1", result.best_val_f1},
                 {"epochs_run", result.log.size()}};
    }
    RunManifest m;
    m.command = "train-vgat";
    m.config = {{"model", model_kind},       {"lr", tcfg.lr},
                {"weight_decay", tcfg.weight_decay}, {"alpha_contrast", tcfg.alpha_contrast},
                {"d_model", train_d_model},  {"max_epochs", tcfg.max_epochs},
                {"patience", tcfg.patience}, {"min_pos_neg_ratio", tcfg.min_pos_neg_ratio}};
    m.add_input(fs::path(graphs_dir) / "graphs_train.jsonl");
    m.add_input(fs::path(graphs_dir) / "graphs_val.jsonl");
    m.outputs.push_back(checkpoint_out);
    if (!log_out.empty()) m.outputs.push_back(log_out);
    m.seed = tcfg.seed;
    m.duration_ms = watch.elapsed_ms();
    m.write(checkpoint_out + ".manifest.json");
    std::cout << summary.dump(2) << "\n";
  });

  // ---- simulate ---------------------------------------------------------------
  auto* sim_cmd = app.add_subcommand("simulate", "run the collective-agent simulation");
  DataOptions sim_data;
  sim_data.add_flags(sim_cmd);
  BackendOptions sim_backend;
  sim_backend.add_flags(sim_cmd);
  std::string cohort_window, sim_mode = "vgat", sim_out = "outcomes.jsonl";
  std::string checkpoint_path, gat_checkpoint_path, templates_dir;
  SimulateConfig sim_cfg;
  int sim_horizon = 365, n_runs = 5, jobs = 1, sim_d_enc = 128;
  uint64_t sim_seed = 1;
  sim_cmd->add_option("--cohort-window", cohort_window, "first-financing window")->required();
  sim_cmd->add_option("--mode", sim_mode)
      ->check(CLI::IsMember({"vgat", "gat_baseline", "network", "full", "none"}));
  sim_cmd->add_option("--k", sim_cfg.k)->capture_default_str();
  sim_cmd->add_option("--n-runs", n_runs)->capture_default_str();
  sim_cmd->add_option("--threshold", sim_cfg.threshold)->capture_default_str();
  sim_cmd->add_option("--checkpoint", checkpoint_path, "trained VGAT checkpoint");
  sim_cmd->add_option("--gat-checkpoint", gat_checkpoint_path, "trained baseline checkpoint");
  sim_cmd->add_option("--templates", templates_dir, "prompt template directory");
  sim_cmd->add_option("--horizon-days", sim_horizon)->capture_default_str();
  sim_cmd->add_option("--jobs", jobs, "parallel startups per run")->capture_default_str();
  sim_cmd->add_option("--d-enc", sim_d_enc)->capture_default_str();
  sim_cmd->add_option("--seed", sim_seed)->capture_default_str();
  sim_cmd->add_option("--out", sim_out)->capture_default_str();
  sim_cmd->add_flag("--no-roleplay", [&](size_t) { sim_cfg.roleplay = false; },
                    "replace investor personas with a generic analyst");
  sim_cmd->callback([&] {
    std::vector<std::string> problems;
    auto ds = sim_data.load(problems);
    std::vector<CohortEntry> cohort;
    try {
      cohort = cohort_from_window(ds, cohort_window, sim_horizon);
      if (cohort.empty()) problems.push_back("cohort window contains no first financings");
    } catch (const InvalidConfig& e) {
      problems.push_back(e.what());
    }
    const auto mode = interaction_mode_from_string(sim_mode);
    if (!mode) problems.push_back("unknown mode " + sim_mode);
    fail_all(problems);

    Stopwatch watch;
    sim_cfg.mode = *mode;
    sim_cfg.seed = sim_seed;
    VgatParams vgat_params;
    GatBaselineParams gat_params;
    auto encoder = make_encoder("hashing", sim_d_enc);
    if (sim_cfg.mode == InteractionMode::vgat) {
      if (checkpoint_path.empty()) throw MissingCheckpoint("--checkpoint required for mode vgat");
      vgat_params = load_checkpoint<VgatParams>(checkpoint_path);
      sim_cfg.vgat_params = &vgat_params;
      encoder = make_encoder("hashing", vgat_params.d_enc);
    }
    if (sim_cfg.mode == InteractionMode::gat_baseline) {
      if (gat_checkpoint_path.empty()) {
        throw MissingCheckpoint("--gat-checkpoint required for mode gat_baseline");
      }
      gat_params = load_checkpoint<GatBaselineParams>(gat_checkpoint_path);
      sim_cfg.gat_params = &gat_params;
      encoder = make_encoder("hashing", gat_params.d_enc);
    }
    sim_cfg.encoder = encoder.get();

    const auto templates = load_templates(templates_dir);
    const auto run = run_cohort(ds, cohort, sim_cfg, sim_backend.factory(sim_seed), templates,
                                n_runs, jobs);
    write_outcomes(run.outcomes, sim_out);
    RunManifest m;
    m.command = "simulate";
    m.config = sim_cfg.snapshot(sim_backend.backend);
    m.config["cohort_window"] = cohort_window;
    m.config["n_runs"] = n_runs;
    m.config["backend_options"] = sim_backend.snapshot();
    m.add_input(sim_data.data_dir);
    if (!checkpoint_path.empty()) m.add_input(checkpoint_path);
    m.outputs.push_back(sim_out);
    m.seed = sim_seed;
    m.duration_ms = watch.elapsed_ms();
    m.write(sim_out + ".manifest.json");
    size_t total = 0;
    for (const auto& r : run.outcomes) total += r.size();
    std::cout << "simulated " << total << " outcomes over " << n_runs << " run(s); "
              << run.failures.size() << " failure(s)\n";
  });

  // ---- evaluate -----------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("evaluate", "score outcomes against cohort labels");
  DataOptions eval_data;
  eval_data.add_flags(eval_cmd);
  std::string eval_outcomes = "outcomes.jsonl", eval_window, eval_out = "report.json";
  std::vector<int> eval_k = {10, 20, 30};
  int eval_horizon = 365;
  double random_rate = -1.0;
  uint64_t eval_seed = 1;
  eval_cmd->add_option("--outcomes", eval_outcomes)->capture_default_str();
  eval_cmd->add_option("--cohort-window", eval_window)->required();
  eval_cmd->add_option("--k-list", eval_k)->capture_default_str();
  eval_cmd->add_option("--horizon-days", eval_horizon)->capture_default_str();
  eval_cmd->add_option("--random-rate", random_rate,
                       "also report a Random baseline row at this historical rate");
  eval_cmd->add_option("--seed", eval_seed)->capture_default_str();
  eval_cmd->add_option("--out", eval_out)->capture_default_str();
  eval_cmd->callback([&] {
    std::vector<std::string> problems;
    auto ds = eval_data.load(problems);
    fail_all(problems);
    Stopwatch watch;
    const auto cohort = cohort_from_window(ds, eval_window, eval_horizon);
    const auto runs = load_outcomes(eval_outcomes);
    if (runs.empty() || runs.front().empty()) {
      throw AllMonthsSkipped("outcomes file is empty: " + eval_outcomes);
    }
    std::map<std::string, MetricsReport> table;
    table.emplace("simvc", evaluate_runs(runs, cohort, eval_k));
    if (random_rate >= 0.0) {
      std::vector<std::vector<ScoredVerdict>> baseline_runs;
      for (size_t r = 0; r < runs.size(); ++r) {
        baseline_runs.push_back(random_baseline(cohort, random_rate, mix_seed(eval_seed, "rb" + std::to_string(r))));
      }
      table.emplace("random", evaluate_scored(baseline_runs, eval_k));
    }
    json j;
    for (const auto& [name, rep] : table) j[name] = rep.to_json();
    {
      std::ofstream out(eval_out);
      out << j.dump(2) << "\n";
    }
    RunManifest m;
    m.command = "evaluate";
    m.config = {{"outcomes", eval_outcomes}, {"cohort_window", eval_window}, {"k_list", eval_k}};
    m.add_input(eval_outcomes);
    m.add_input(eval_data.data_dir);
    m.outputs.push_back(eval_out);
    m.seed = eval_seed;
    m.duration_ms = watch.elapsed_ms();
    m.write(eval_out + ".manifest.json");
    std::cout << format_report_table(table, eval_k);
  });

  // ---- ablate ---------------------------------------------------------------------
  auto* abl_cmd = app.add_subcommand("ablate", "run the interaction-mode ablation table");
  DataOptions abl_data;
  abl_data.add_flags(abl_cmd);
  BackendOptions abl_backend;
  abl_backend.add_flags(abl_cmd);
  std::string abl_window, abl_out = "ablation_report.json";
  std::string abl_checkpoint, abl_gat_checkpoint, abl_templates;
  std::vector<int> abl_eval_k = {10};
  std::vector<int> abl_k_sweep;
  SimulateConfig abl_cfg;
  int abl_horizon = 365, abl_runs = 1, abl_jobs = 1;
  uint64_t abl_seed = 1;
  abl_cmd->add_option("--cohort-window", abl_window)->required();
  abl_cmd->add_option("--checkpoint", abl_checkpoint)->required();
  abl_cmd->add_option("--gat-checkpoint", abl_gat_checkpoint)->required();
  abl_cmd->add_option("--templates", abl_templates);
  abl_cmd->add_option("--k", abl_cfg.k)->capture_default_str();
  abl_cmd->add_option("--k-sweep", abl_k_sweep, "additional k values to sweep (e.g. 1 10 20 30)");
  abl_cmd->add_option("--eval-k", abl_eval_k)->capture_default_str();
  abl_cmd->add_option("--threshold", abl_cfg.threshold)->capture_default_str();
  abl_cmd->add_option("--n-runs", abl_runs)->capture_default_str();
  abl_cmd->add_option("--horizon-days", abl_horizon)->capture_default_str();
  abl_cmd->add_option("--jobs", abl_jobs)->capture_default_str();
  abl_cmd->add_option("--seed", abl_seed)->capture_default_str();
  abl_cmd->add_option("--out", abl_out)->capture_default_str();
  abl_cmd->callback([&] {
    std::vector<std::string> problems;
    auto ds = abl_data.load(problems);
    fail_all(problems);
    Stopwatch watch;
    const auto cohort = cohort_from_window(ds, abl_window, abl_horizon);
    auto vgat_params = load_checkpoint<VgatParams>(abl_checkpoint);
    auto gat_params = load_checkpoint<GatBaselineParams>(abl_gat_checkpoint);
    auto encoder = make_encoder("hashing", vgat_params.d_enc);
    abl_cfg.vgat_params = &vgat_params;
    abl_cfg.gat_params = &gat_params;
    abl_cfg.encoder = encoder.get();
    abl_cfg.seed = abl_seed;
    const auto templates = load_templates(abl_templates);
    const auto factory = abl_backend.factory(abl_seed);

    auto table = run_ablations(ds, cohort, abl_cfg, factory, templates, abl_eval_k, abl_runs,
                               abl_jobs);
    json j;
    for (const auto& [name, rep] : table) j[name] = rep.to_json();

    if (!abl_k_sweep.empty()) {
      json sweep;
      for (int k : abl_k_sweep) {
        SimulateConfig cfg = abl_cfg;
        cfg.k = k;
        cfg.mode = InteractionMode::vgat;
        const auto run = run_cohort(ds, cohort, cfg, factory, templates, abl_runs, abl_jobs);
        const auto rep = evaluate_runs(run.outcomes, cohort, {});
        sweep["k=" + std::to_string(k)] = {{"precision", rep.precision},
                                           {"recall", rep.recall ? json(*rep.recall) : json()},
                                           {"f1", rep.f1}};
      }
      j["k_sweep"] = sweep;
    }
    {
      std::ofstream out(abl_out);
      out << j.dump(2) << "\n";
    }
    RunManifest m;
    m.command = "ablate";
    m.config = abl_cfg.snapshot(abl_backend.backend);
    m.config["eval_k"] = abl_eval_k;
    m.add_input(abl_data.data_dir);
    m.add_input(abl_checkpoint);
    m.add_input(abl_gat_checkpoint);
    m.outputs.push_back(abl_out);
    m.seed = abl_seed;
    m.duration_ms = watch.elapsed_ms();
    m.write(abl_out + ".manifest.json");
    std::cout << format_report_table(table, abl_eval_k);
  });

  // ---- consistency -------------------------------------------------------------------
  auto* cons_cmd = app.add_subcommand("consistency", "repeat simulations with fixed sampling");
  DataOptions cons_data;
  cons_data.add_flags(cons_cmd);
  BackendOptions cons_backend;
  cons_backend.add_flags(cons_cmd);
  std::string cons_window, cons_out = "consistency.json";
  int cons_sample = 20, cons_repeats = 20, cons_horizon = 365;
  SimulateConfig cons_cfg;
  cons_cfg.mode = InteractionMode::none;
  uint64_t cons_seed = 1;
  cons_cmd->add_option("--cohort-window", cons_window)->required();
  cons_cmd->add_option("--sample", cons_sample, "number of startups to sample")
      ->capture_default_str();
  cons_cmd->add_option("--repeats", cons_repeats)->capture_default_str();
  cons_cmd->add_option("--k", cons_cfg.k)->capture_default_str();
  cons_cmd->add_option("--horizon-days", cons_horizon)->capture_default_str();
  cons_cmd->add_option("--seed", cons_seed)->capture_default_str();
  cons_cmd->add_option("--out", cons_out)->capture_default_str();
  cons_cmd->callback([&] {
    std::vector<std::string> problems;
    auto ds = cons_data.load(problems);
    fail_all(problems);
    Stopwatch watch;
    const auto cohort = cohort_from_window(ds, cons_window, cons_horizon);
    std::set<std::string> pool;
    for (const auto& e : cohort) pool.insert(e.startup_id);
    const auto ids = sample_candidates(pool, size_t(cons_sample), mix_seed(cons_seed, "consistency"));
    cons_cfg.seed = cons_seed;
    const auto res = consistency(ds, ids, cons_repeats, cons_cfg,
                                 cons_backend.factory(cons_seed), PromptTemplates::defaults());
    json j = {{"variation_fraction", res.variation_fraction}, {"scores", res.scores},
              {"repeats", cons_repeats}};
    {
      std::ofstream out(cons_out);
      out << j.dump(2) << "\n";
    }
    RunManifest m;
    m.command = "consistency";
    m.config = {{"sample", cons_sample}, {"repeats", cons_repeats},
                {"backend_options", cons_backend.snapshot()}};
    m.add_input(cons_data.data_dir);
    m.outputs.push_back(cons_out);
    m.seed = cons_seed;
    m.duration_ms = watch.elapsed_ms();
    m.write(cons_out + ".manifest.json");
    std::cout << "variation fraction: " << res.variation_fraction << "\n";
  });

  // ---- graph-stats --------------------------------------------------------------------
  auto* stats_cmd = app.add_subcommand("graph-stats", "co-investment graph distance statistics");
  DataOptions stats_data;
  stats_data.add_flags(stats_cmd);
  std::string stats_cutoff, stats_out = "graph_stats.json";
  size_t stats_pairs = 500;
  uint64_t stats_seed = 7;
  stats_cmd->add_option("--cutoff", stats_cutoff, "graph cutoff date")->required();
  stats_cmd->add_option("--sample-pairs", stats_pairs)->capture_default_str();
  stats_cmd->add_option("--seed", stats_seed)->capture_default_str();
  stats_cmd->add_option("--out", stats_out)->capture_default_str();
  stats_cmd->callback([&] {
    std::vector<std::string> problems;
    auto ds = stats_data.load(problems);
    const auto cutoff = Date::parse(stats_cutoff);
    if (!cutoff) problems.push_back("--cutoff is not a valid ISO date");
    fail_all(problems);
    Stopwatch watch;
    const auto stats = graph_distance_stats(ds, *cutoff, stats_pairs, stats_seed);
    json j = {{"mean_distance_future_coinvestors", stats.mean_distance_future_coinvestors},
              {"mean_distance_overall", stats.mean_distance_overall},
              {"future_pairs_used", stats.future_pairs_used},
              {"future_pairs_unreachable", stats.future_pairs_unreachable},
              {"sampled_pairs_used", stats.sampled_pairs_used},
              {"sampled_pairs_unreachable", stats.sampled_pairs_unreachable}};
    {
      std::ofstream out(stats_out);
      out << j.dump(2) << "\n";
    }
    RunManifest m;
    m.command = "graph-stats";
    m.config = {{"cutoff", stats_cutoff}, {"sample_pairs", stats_pairs}};
    m.add_input(stats_data.data_dir);
    m.outputs.push_back(stats_out);
    m.seed = stats_seed;
    m.duration_ms = watch.elapsed_ms();
    m.write(stats_out + ".manifest.json");
    std::cout << j.dump(2) << "\n";
  });

  try {
    auto args = expand_config_args(argc, argv);
    std::reverse(args.begin(), args.end());  // CLI11 consumes a reversed vector
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const Error& e) {
    const std::string what = e.what();
    const auto colon = what.find(':');
    json j = {{"error", what.substr(0, colon)}, {"message", what}};
    std::cerr << j.dump(2) << "\n";
    return 1;
  } catch (const std::exception& e) {
    json j = {{"error", "Unexpected"}, {"message", e.what()}};
    std::cerr << j.dump(2) << "\n";
    return 1;
  }
}
