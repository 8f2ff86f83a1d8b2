#pragma once

// Command execution for the relrag tool: config, artifacts, manifests, replay.

#include <chrono>
#include <ctime>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <boost/version.hpp>
#include <json.hpp>

#include "relrag/bounds.hpp"
#include "relrag/io.hpp"
#include "relrag/pipeline.hpp"
#include "relrag/sampling.hpp"
#include "relrag/simulation.hpp"

#ifndef RELRAG_VERSION_STRING
#define RELRAG_VERSION_STRING "0.0.0"
#endif

namespace relrag {

enum class Command { Select, Sample, Bound, Simulate, Sweep, Replay };

inline std::string to_string(Command c) {
  switch (c) {
    case Command::Select: return "select";
    case Command::Sample: return "sample";
    case Command::Bound: return "bound";
    case Command::Simulate: return "simulate";
    case Command::Sweep: return "sweep";
    case Command::Replay: return "replay";
  }
  return "unknown";
}

inline Command command_from_string(const std::string& s) {
  for (Command c : {Command::Select, Command::Sample, Command::Bound, Command::Simulate, Command::Sweep,
                    Command::Replay})
    if (to_string(c) == s) return c;
  fail(ErrorCode::ConfigError, "unknown command '" + s + "'");
}

inline constexpr const char* kOutDirEnv = "RELRAG_OUT_DIR";
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kResultsFile = "results.csv";
inline constexpr const char* kAuditFile = "audit.jsonl";

struct JudgeConfig {
  double eps1 = 0.0;
  double eps2 = 0.0;
  double flip_noise = 0.0;
  double beta = 0.5;
};

struct BoundConfig {
  std::string kind = "thm3";  // thm1 | thm3
  int k = 20;
  int k_prime = 4;
  double eps1 = 0.01;
  double eps2 = 0.01;
  double mu = 0.25;
  double delta = 0.5;
  double eta = 0.1;
  int m = 2;
  double alpha = 0.5;
  int rounds = 20;
  std::optional<double> target_delta;  // also report the minimum T for this delta
};

struct GridConfig {
  std::string preset;  // "" or "mis-malicious"
  std::vector<int> k{10};
  std::vector<int> k_prime;  // empty: 0..k/2
  std::vector<int> positions;
  std::vector<double> eps1{0.05};
  std::vector<double> eps2{0.2};
  std::vector<double> flip_noise{0.0};
  std::vector<double> irrelevance_rate{0.0};
  std::vector<int> rounds{20};
  std::vector<int> context_size{2};
  std::vector<std::string> schemes{"exponential:0.9"};
  std::string attack = "suffix";    // none | suffix | position
  std::string pipeline = "direct";  // direct | sampling
  int trials = 5000;
};

struct RunConfig {
  Command command = Command::Bound;
  std::string trace;      // select/sample input
  std::string documents;  // select/sample input (simulated answers)
  std::string manifest;   // replay input
  std::string out_dir;    // empty: $RELRAG_OUT_DIR or ./relrag-out
  std::uint64_t seed = 0;
  int workers = 1;
  bool audit = false;
  bool resume = false;
  std::string scheme = "exponential:0.9";  // fills missing document weights
  std::size_t max_sets = 64;
  int rounds = 20;       // sample
  int context_size = 2;  // sample
  JudgeConfig judge;
  BoundConfig bound;
  GridConfig grid;
};

inline void to_json(json& j, const RunConfig& c) {
  j = json{{"command", to_string(c.command)},
           {"trace", c.trace},
           {"documents", c.documents},
           {"seed", c.seed},
           {"workers", c.workers},
           {"audit", c.audit},
           {"resume", c.resume},
           {"scheme", c.scheme},
           {"max_sets", c.max_sets},
           {"rounds", c.rounds},
           {"context_size", c.context_size},
           {"judge", {{"eps1", c.judge.eps1}, {"eps2", c.judge.eps2}, {"flip_noise", c.judge.flip_noise},
                      {"beta", c.judge.beta}}},
           {"bound", {{"kind", c.bound.kind}, {"k", c.bound.k}, {"k_prime", c.bound.k_prime},
                      {"eps1", c.bound.eps1}, {"eps2", c.bound.eps2}, {"mu", c.bound.mu},
                      {"delta", c.bound.delta}, {"eta", c.bound.eta}, {"m", c.bound.m},
                      {"alpha", c.bound.alpha}, {"T", c.bound.rounds},
                      {"target_delta", c.bound.target_delta ? json(*c.bound.target_delta) : json(nullptr)}}},
           {"grid", {{"preset", c.grid.preset}, {"k", c.grid.k}, {"k_prime", c.grid.k_prime},
                     {"positions", c.grid.positions}, {"eps1", c.grid.eps1}, {"eps2", c.grid.eps2},
                     {"flip_noise", c.grid.flip_noise}, {"irrelevance_rate", c.grid.irrelevance_rate},
                     {"T", c.grid.rounds}, {"m", c.grid.context_size}, {"schemes", c.grid.schemes},
                     {"attack", c.grid.attack}, {"pipeline", c.grid.pipeline}, {"trials", c.grid.trials}}}};
}

inline RunConfig config_from_json(const json& j) {
  try {
    RunConfig c;
    c.command = command_from_string(j.at("command").get<std::string>());
    c.trace = j.at("trace").get<std::string>();
    c.documents = j.at("documents").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.workers = j.at("workers").get<int>();
    c.audit = j.at("audit").get<bool>();
    c.resume = j.at("resume").get<bool>();
    c.scheme = j.at("scheme").get<std::string>();
    c.max_sets = j.at("max_sets").get<std::size_t>();
    c.rounds = j.at("rounds").get<int>();
    c.context_size = j.at("context_size").get<int>();
    const json& jj = j.at("judge");
    c.judge = {jj.at("eps1").get<double>(), jj.at("eps2").get<double>(), jj.at("flip_noise").get<double>(),
               jj.at("beta").get<double>()};
    const json& b = j.at("bound");
    c.bound.kind = b.at("kind").get<std::string>();
    c.bound.k = b.at("k").get<int>();
    c.bound.k_prime = b.at("k_prime").get<int>();
    c.bound.eps1 = b.at("eps1").get<double>();
    c.bound.eps2 = b.at("eps2").get<double>();
    c.bound.mu = b.at("mu").get<double>();
    c.bound.delta = b.at("delta").get<double>();
    c.bound.eta = b.at("eta").get<double>();
    c.bound.m = b.at("m").get<int>();
    c.bound.alpha = b.at("alpha").get<double>();
    c.bound.rounds = b.at("T").get<int>();
    if (!b.at("target_delta").is_null()) c.bound.target_delta = b.at("target_delta").get<double>();
    const json& g = j.at("grid");
    c.grid.preset = g.at("preset").get<std::string>();
    c.grid.k = g.at("k").get<std::vector<int>>();
    c.grid.k_prime = g.at("k_prime").get<std::vector<int>>();
    c.grid.positions = g.at("positions").get<std::vector<int>>();
    c.grid.eps1 = g.at("eps1").get<std::vector<double>>();
    c.grid.eps2 = g.at("eps2").get<std::vector<double>>();
    c.grid.flip_noise = g.at("flip_noise").get<std::vector<double>>();
    c.grid.irrelevance_rate = g.at("irrelevance_rate").get<std::vector<double>>();
    c.grid.rounds = g.at("T").get<std::vector<int>>();
    c.grid.context_size = g.at("m").get<std::vector<int>>();
    c.grid.schemes = g.at("schemes").get<std::vector<std::string>>();
    c.grid.attack = g.at("attack").get<std::string>();
    c.grid.pipeline = g.at("pipeline").get<std::string>();
    c.grid.trials = g.at("trials").get<int>();
    return c;
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("manifest config: ") + e.what());
  }
}

/// Fixes the suffix-attack protocol: direct MIS, tail placement, k' = 0..k/2.
inline void apply_preset(GridConfig& g) {
  if (g.preset.empty()) return;
  if (g.preset != "mis-malicious") fail(ErrorCode::ConfigError, "unknown preset '" + g.preset + "'");
  g.attack = "suffix";
  g.pipeline = "direct";
  g.k_prime.clear();
  g.positions.clear();
}

inline SweepGrid to_grid(const GridConfig& c, std::uint64_t seed) {
  SweepGrid g;
  g.k = c.k;
  g.k_prime = c.k_prime;
  g.positions = c.positions;
  g.eps1 = c.eps1;
  g.eps2 = c.eps2;
  g.flip_noise = c.flip_noise;
  g.irrelevance_rate = c.irrelevance_rate;
  g.rounds = c.rounds;
  g.context_size = c.context_size;
  g.schemes.clear();
  for (const auto& s : c.schemes) g.schemes.push_back(parse_scheme(s));
  if (c.attack == "none") g.attack = AttackKind::None;
  else if (c.attack == "suffix") g.attack = AttackKind::Suffix;
  else if (c.attack == "position") g.attack = AttackKind::Position;
  else fail(ErrorCode::ConfigError, "attack must be none, suffix or position");
  if (c.pipeline != "direct" && c.pipeline != "sampling")
    fail(ErrorCode::ConfigError, "pipeline must be direct or sampling");
  g.sampling = c.pipeline == "sampling";
  if (g.attack == AttackKind::Position && g.positions.empty())
    fail(ErrorCode::ConfigError, "position attack needs at least one position");
  g.trials = c.trials;
  g.seed = seed;
  return g;
}

inline int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::TraceIncomplete:
    case ErrorCode::TraceInvalid: return 3;
    case ErrorCode::GraphTooLarge: return 4;
    default: return 2;
  }
}

inline std::filesystem::path resolve_out_dir(const std::string& requested) {
  if (!requested.empty()) return requested;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return "relrag-out";
}

namespace detail {

inline json selection_json(const SelectionResult& s) {
  return {{"chosen", s.chosen},
          {"size", s.size},
          {"maximum_count", s.maximum_count},
          {"all_maximum", s.all_maximum},
          {"all_maximum_truncated", s.all_maximum_truncated},
          {"in_any_maximum", s.in_any_maximum}};
}

inline json graph_json(const JudgedGraph& g) {
  json edges = json::array();
  json judgments = json::array();
  for (const JudgmentRecord& r : g.judgments) {
    if (r.is_edge) edges.push_back({r.i, r.j});
    judgments.push_back({{"i", r.i}, {"j", r.j}, {"p", r.probability}, {"edge", r.is_edge}});
  }
  return {{"vertices", g.graph.labels()}, {"edges", std::move(edges)}, {"judgments", std::move(judgments)}};
}

inline std::vector<int> indices(const RetrievalSet& set) {
  std::vector<int> out;
  for (const Document& d : set) out.push_back(d.index);
  return out;
}

struct Inputs {
  RetrievalSet set;
  std::vector<Verdict> verdicts;
  JudgeModel judge;
  std::optional<TraceOracle> trace_oracle;
  AnswerTrace answers;
  bool trace_mode = false;
};

inline Inputs load_inputs(const RunConfig& c) {
  if (c.trace.empty() == c.documents.empty())
    fail(ErrorCode::ConfigError, to_string(c.command) + " needs exactly one of --trace or --documents");
  const WeightScheme scheme = parse_scheme(c.scheme);
  Inputs in;
  if (!c.trace.empty()) {
    TraceBundle b = ingest_trace(c.trace, scheme);
    in.set = std::move(b.set);
    in.verdicts = std::move(b.verdicts);
    in.judge = std::move(b.judge);
    in.answers = b.answers;
    in.trace_oracle.emplace(std::move(b.answers));
    in.trace_mode = true;
  } else {
    in.set = documents_from_json(read_json_file(c.documents), scheme);
    in.verdicts = simulated_verdicts(in.set);
    in.judge = JudgeModel::stochastic(c.judge.eps1, c.judge.eps2, c.judge.flip_noise, c.judge.beta);
  }
  return in;
}

inline json run_select(const RunConfig& c) {
  const Inputs in = load_inputs(c);
  const SimulatedOracle simulated;
  const AnswerOracle* oracle = nullptr;
  if (in.trace_oracle) {
    if (in.trace_oracle->has_final_answers()) oracle = &*in.trace_oracle;
  } else {
    oracle = &simulated;
  }
  const DirectOutcome r = run_direct_mis(in.set, in.verdicts, in.judge, c.seed, oracle,
                                         {.enumerate_all = true, .max_sets = c.max_sets});
  std::vector<int> dropped;
  for (std::size_t i = 0; i < in.set.size(); ++i)
    if (in.verdicts[i] == Verdict::Drop) dropped.push_back(in.set[i].index);

  json report{{"command", "select"},
              {"mode", in.trace_mode ? "trace" : "documents"},
              {"seed", c.seed},
              {"k", in.set.k()},
              {"k_filtered", r.filtered.k()},
              {"dropped", dropped},
              {"graph", graph_json(r.judged)},
              {"selection", selection_json(r.selection)},
              {"selected", indices(RetrievalSet(r.selected))},
              {"abstained", r.abstained},
              {"answer", r.answer ? json(*r.answer) : json(nullptr)}};
  if (!in.trace_mode) {
    // Bounds use post-filter counts; pre-filter counts are reported alongside.
    const int k_post = r.filtered.k();
    const int kp_post = r.filtered.k_prime();
    report["counts"] = {{"k_pre", in.set.k()}, {"k_prime_pre", in.set.k_prime()},
                        {"k_post", k_post}, {"k_prime_post", kp_post}};
    if (k_post > 0) {
      const InclusionBound b =
          thm1_failure_bound({k_post, kp_post, c.judge.eps1, c.judge.eps2, 0.25, 0.5});
      report["thm1_total"] = b.total;
      report["thm1_regime_ok"] = b.regime_ok();
    }
  }
  return report;
}

inline json run_sample(const RunConfig& c) {
  const Inputs in = load_inputs(c);
  const SamplingPlan plan{c.rounds, c.context_size, parse_scheme(c.scheme), c.seed};
  const SimulatedOracle simulated;
  const AnswerOracle& oracle = in.trace_oracle ? static_cast<const AnswerOracle&>(*in.trace_oracle)
                                               : static_cast<const AnswerOracle&>(simulated);
  ContextJudge judge = in.judge;
  if (in.trace_mode) judge = AnswerAgreement{in.answers.answer_contradictions};
  const SamplingOutcome r = run_sampling_mis(in.set, in.verdicts, plan, judge, oracle,
                                             {.enumerate_all = true, .max_sets = c.max_sets});
  json contexts = json::array();
  for (std::size_t i = 0; i < r.contexts.size(); ++i) {
    const Context& ctx = r.contexts[i];
    json o{{"round", ctx.round}, {"draws", ctx.draws}, {"key", join_key(ctx.rank_key)},
           {"answer", r.answers[i]}};
    if (!in.trace_mode) o["clean"] = ctx.clean;
    contexts.push_back(std::move(o));
  }
  json report{{"command", "sample"},
              {"mode", in.trace_mode ? "trace" : "documents"},
              {"seed", c.seed},
              {"T", c.rounds},
              {"m", c.context_size},
              {"k", in.set.k()},
              {"k_filtered", r.filtered.k()},
              {"contexts", std::move(contexts)},
              {"ranked_rounds", r.aggregate.ranked_rounds},
              {"graph", graph_json(r.aggregate.judged)},
              {"selection", selection_json(r.aggregate.selection)},
              {"chosen_rounds", r.aggregate.chosen_contexts},
              {"final_documents", indices(RetrievalSet(r.aggregate.final_documents))},
              {"abstained", r.aggregate.abstained},
              {"answer", r.aggregate.answer}};
  if (!in.trace_mode && !r.filtered.empty()) {
    const double eta = r.filtered.malicious_weight();
    const AggregationBound t = thm3_failure_prob({eta, c.context_size, 0.5, c.rounds});
    report["eta"] = eta;
    report["chosen_clean"] = r.aggregate.chosen_clean;
    report["thm3_delta"] = t.delta;
  }
  return report;
}

inline json run_bound(const RunConfig& c) {
  const BoundConfig& b = c.bound;
  if (b.kind == "thm1") {
    const InclusionBoundParams p{b.k, b.k_prime, b.eps1, b.eps2, b.mu, b.delta};
    const InclusionBound r = thm1_failure_bound(p);
    return {{"command", "bound"},
            {"kind", "thm1"},
            {"params", {{"k", p.k}, {"k_prime", p.k_prime}, {"eps1", p.eps1}, {"eps2", p.eps2},
                        {"mu", p.mu}, {"delta", p.delta}}},
            {"bad1", r.bad1},
            {"bad2", r.bad2},
            {"t1", r.t1},
            {"v", r.v},
            {"direct_sum", r.direct_sum},
            {"total", r.total},
            {"regime_ok", r.regime_ok()},
            {"margins", {{"corruption", r.regime.corruption_margin}, {"eps1", r.regime.eps1_margin},
                         {"eps2", r.regime.eps2_margin}}},
            {"limits", {{"eps1", r.regime.eps1_limit}, {"eps2", r.regime.eps2_limit}}},
            {"terms", r.terms},
            {"warnings", r.warnings}};
  }
  if (b.kind != "thm3") fail(ErrorCode::ConfigError, "bound kind must be thm1 or thm3");
  const AggregationBoundParams p{b.eta, b.m, b.alpha, b.rounds};
  const AggregationBound r = thm3_failure_prob(p);
  json out{{"command", "bound"},
           {"kind", "thm3"},
           {"params", {{"eta", p.eta}, {"m", p.m}, {"alpha", p.alpha}, {"T", p.rounds}}},
           {"delta", r.delta},
           {"p_clean", r.p_clean},
           {"margin", r.margin},
           {"warnings", r.warnings}};
  if (b.target_delta) {
    out["target_delta"] = *b.target_delta;
    out["min_rounds"] = thm3_min_rounds(p.eta, p.m, p.alpha, *b.target_delta);
  }
  return out;
}

/// Streams one CSV row per cell into results.csv, resuming if requested.
inline json run_grid(const RunConfig& c, const std::filesystem::path& dir) {
  GridConfig gc = c.grid;
  apply_preset(gc);
  const std::vector<SimScenario> cells = expand(to_grid(gc, c.seed));
  for (const SimScenario& s : cells) s.validate();

  const auto csv_path = dir / kResultsFile;
  std::set<std::string> done;
  if (c.resume) done = completed_keys(csv_path);
  const bool fresh_file = done.empty();
  std::ofstream csv(csv_path, fresh_file ? std::ios::trunc | std::ios::binary : std::ios::app | std::ios::binary);
  if (!csv) fail(ErrorCode::ConfigError, "cannot write " + csv_path.string());
  if (fresh_file) csv << csv_line(estimate_csv_header()) << '\n' << std::flush;

  std::ofstream audit;
  if (c.audit) {
    audit.open(dir / kAuditFile, fresh_file ? std::ios::trunc | std::ios::binary : std::ios::app | std::ios::binary);
    if (!audit) fail(ErrorCode::ConfigError, "cannot write audit stream");
  }
  std::size_t ran = 0;
  for (const SimScenario& s : cells) {
    if (done.count(s.key())) continue;
    std::vector<TrialOutcome> trials;
    const RobustnessEstimate est = run_scenario(s, c.workers, c.audit ? &trials : nullptr);
    csv << estimate_csv_row(s, est) << '\n' << std::flush;
    for (const TrialOutcome& o : trials) audit << trial_to_json(s, o).dump() << '\n';
    if (c.audit) audit.flush();
    ++ran;
  }
  return {{"cells", cells.size()}, {"ran", ran}, {"skipped", cells.size() - ran}};
}

inline std::string iso_utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string absolute_or_empty(const std::string& p) {
  return p.empty() ? p : std::filesystem::absolute(p).lexically_normal().string();
}

}  // namespace detail

struct RunResult {
  int exit_code = 0;
  std::filesystem::path out_dir;
  json report;  // command output, or the error report
};

/// Executes `config`. Artifacts and manifest.json go to the output directory;
/// the command's JSON report is also printed to `out`. Errors produce a JSON
/// report on `err` and a nonzero exit code.
inline RunResult run(RunConfig config, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunResult result;
  const auto start = std::chrono::steady_clock::now();
  std::optional<std::string> replayed_from;
  try {
    if (config.command == Command::Replay) {
      if (config.manifest.empty()) fail(ErrorCode::ConfigError, "replay needs --manifest");
      const json manifest = read_json_file(config.manifest);
      if (!manifest.contains("config")) fail(ErrorCode::ConfigError, "manifest has no config block");
      RunConfig recorded = config_from_json(manifest["config"]);
      if (recorded.command == Command::Replay) fail(ErrorCode::ConfigError, "manifest records a replay");
      recorded.out_dir = config.out_dir;
      if (config.workers > 0) recorded.workers = config.workers;
      recorded.resume = false;
      replayed_from = detail::absolute_or_empty(config.manifest);
      config = std::move(recorded);
    }
    config.trace = detail::absolute_or_empty(config.trace);
    config.documents = detail::absolute_or_empty(config.documents);
    if (config.workers < 1) fail(ErrorCode::ConfigError, "workers must be >= 1");

    result.out_dir = resolve_out_dir(config.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(result.out_dir, ec);
    if (ec) fail(ErrorCode::ConfigError, "cannot create output directory " + result.out_dir.string());

    std::vector<std::string> outputs;
    switch (config.command) {
      case Command::Select:
        result.report = detail::run_select(config);
        outputs.push_back("selection.json");
        break;
      case Command::Sample:
        result.report = detail::run_sample(config);
        outputs.push_back("sampling.json");
        break;
      case Command::Bound:
        result.report = detail::run_bound(config);
        outputs.push_back("bound.json");
        break;
      case Command::Simulate:
      case Command::Sweep:
        result.report = detail::run_grid(config, result.out_dir);
        outputs.push_back(kResultsFile);
        if (config.audit) outputs.push_back(kAuditFile);
        break;
      case Command::Replay: break;
    }
    if (config.command == Command::Select || config.command == Command::Sample ||
        config.command == Command::Bound)
      write_text_file(result.out_dir / outputs.front(), result.report.dump(2) + "\n");

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json manifest{{"tool", "relrag"},
                  {"version", RELRAG_VERSION_STRING},
                  {"schema_version", kSchemaVersion},
                  {"versions", {{"relrag", RELRAG_VERSION_STRING},
                                {"compiler", __VERSION__},
                                {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                      std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                      std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                                {"boost", BOOST_LIB_VERSION}}},
                  {"command", to_string(config.command)},
                  {"seed", config.seed},
                  {"config", config},
                  {"outputs", outputs},
                  {"started_at", detail::iso_utc_now()},
                  {"wall_time_seconds", wall}};
    if (replayed_from) manifest["replayed_from"] = *replayed_from;
    write_text_file(result.out_dir / kManifestFile, manifest.dump(2) + "\n");
    out << result.report.dump(2) << '\n';
  } catch (const Error& e) {
    result.exit_code = exit_code(e.code());
    result.report = {{"error", {{"code", to_string(e.code())}, {"message", e.what()},
                                {"exit_code", result.exit_code}}}};
    err << result.report.dump(2) << '\n';
  } catch (const std::exception& e) {
    result.exit_code = 1;
    result.report = {{"error", {{"code", "Internal"}, {"message", e.what()}, {"exit_code", 1}}}};
    err << result.report.dump(2) << '\n';
  }
  return result;
}

}  // namespace relrag
