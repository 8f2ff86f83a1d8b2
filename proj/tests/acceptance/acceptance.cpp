// Acceptance suite: prints one PASS/FAIL line per criterion, exits nonzero on
// any failure.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "relrag/bounds.hpp"
#include "relrag/io.hpp"
#include "relrag/mis.hpp"
#include "relrag/pipeline.hpp"
#include "relrag/runner.hpp"
#include "relrag/sampling.hpp"
#include "relrag/simulation.hpp"
#include "relrag/stats.hpp"

namespace fs = std::filesystem;
using namespace relrag;

namespace {

const fs::path kFixtures = RELRAG_FIXTURE_DIR;
const std::string kCli = RELRAG_CLI_PATH;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "relrag_acceptance" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int sh(const std::string& cmd) {
  const int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string capture(const std::string& cmd) {
  std::string out;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return out;
  std::array<char, 4096> buf{};
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  ::pclose(pipe);
  return out;
}

// p_malicious_in_mis by k' from a results.csv, keyed on (k, eps2).
std::map<std::tuple<int, std::string, int>, double> csv_curves(const std::string& text) {
  std::map<std::tuple<int, std::string, int>, double> out;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  const auto header = csv_split(line);
  auto col = [&](const char* name) {
    return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
  };
  while (std::getline(in, line)) {
    const auto cells = csv_split(line);
    out[{std::stoi(cells[col("k")]), cells[col("eps2")], std::stoi(cells[col("k_prime")])}] =
        std::stod(cells[col("p_malicious_in_mis")]);
  }
  return out;
}

Outcome ac1() {
  const TraceBundle b = ingest_trace(kFixtures / "fig1.json");
  const auto t0 = Clock::now();
  const DirectOutcome r = run_direct_mis(b.set, b.verdicts, b.judge, 0, nullptr);
  const double ms = seconds_since(t0) * 1e3;
  const bool ok = r.selection.chosen == std::vector<int>{1, 2, 3} &&
                  r.selection.all_maximum == std::vector<LexKey>{{1, 2, 3}, {1, 2, 5}} && ms < 1.0;
  return {ok, fmt("select fig1 -> {%s}, co-maximum sets %zu, %.4f ms", join_key(r.selection.chosen).c_str(),
                  r.selection.all_maximum.size(), ms)};
}

Outcome ac2() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(20240601);
  const JudgeModel perfect = JudgeModel::stochastic(0, 0);
  const std::vector<WeightScheme> schemes{Exponential{0.9}, Uniform{}, Exponential{0.5}};
  int agree = 0;
  constexpr int kScenarios = 10000;
  for (int s = 0; s < kScenarios; ++s) {
    const int k = std::uniform_int_distribution<int>(1, 16)(gen);
    const int kp = std::uniform_int_distribution<int>(0, (k - 1) / 2)(gen);
    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), gen);
    std::vector<Role> roles(static_cast<std::size_t>(k), Role::BenignRelevant);
    for (int i = 0; i < kp; ++i) roles[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = Role::Malicious;
    const auto set = make_retrieval_set(roles, schemes[static_cast<std::size_t>(s) % schemes.size()]);
    const auto r = run_direct_mis(set, simulated_verdicts(set), perfect, gen(), nullptr, {.enumerate_all = false});
    std::vector<int> benign;
    for (const Document& d : set)
      if (d.role != Role::Malicious) benign.push_back(d.index);
    agree += r.selection.chosen == benign;
  }
  const double secs = seconds_since(t0);
  return {agree == kScenarios && secs < 30.0,
          fmt("%d/%d perfect-judge scenarios chose exactly the benign set, %.2f s", agree, kScenarios, secs)};
}

Outcome ac3() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(77);
  int agree = 0;
  constexpr int kGraphs = 10000;
  for (int g = 0; g < kGraphs; ++g) {
    const int n = std::uniform_int_distribution<int>(0, 12)(gen);
    const double density = std::uniform_real_distribution<double>(0.0, 1.0)(gen);
    auto graph = ContradictionGraph::with_vertices(n);
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v)
        if (std::bernoulli_distribution(density)(gen)) graph.add_edge(u, v);
    const auto fast = select_mis(graph, {.enumerate_all = true, .max_sets = 1u << 12});
    const auto slow = mis_oracle(graph, 1u << 12);
    agree += fast.chosen == slow.chosen && fast.all_maximum == slow.all_maximum &&
             fast.maximum_count == slow.maximum_count;
  }
  const double secs = seconds_since(t0);
  return {agree == kGraphs && secs < 60.0,
          fmt("%d/%d random graphs (n <= 12) agree with exhaustive enumeration, %.2f s", agree, kGraphs, secs)};
}

Outcome ac4() {
  const auto t0 = Clock::now();
  const fs::path dir = scratch("ac4");
  bool ok = true;
  std::string detail;
  struct Run {
    int k;
    std::vector<double> eps2;
    const char* fixture;
  };
  for (const Run& spec : {Run{10, {0.2}, "mis_malicious_k10.csv"}, Run{20, {0.2, 0.4}, "mis_malicious_k20.csv"}}) {
    RunConfig c;
    c.command = Command::Simulate;
    c.grid.preset = "mis-malicious";
    c.grid.k = {spec.k};
    c.grid.eps1 = {0.05};
    c.grid.eps2 = spec.eps2;
    c.seed = 2024;
    c.out_dir = (dir / std::to_string(spec.k)).string();
    std::ostringstream sink;
    if (run(c, sink, sink).exit_code != 0) return {false, "simulate failed: " + sink.str()};
    const std::string produced = slurp(fs::path(c.out_dir) / kResultsFile);
    const auto curves = csv_curves(produced);
    for (double e2 : spec.eps2) {
      const std::string key = format_double(e2);
      std::string curve;
      for (int kp = 0; kp <= spec.k / 2; ++kp) curve += fmt("%s%.4f", kp ? " " : "", curves.at({spec.k, key, kp}));
      detail += fmt("k=%d eps2=%g p(k')=[%s]; ", spec.k, e2, curve.c_str());
      const int robust_up_to = spec.k == 10 ? 3 : 7;
      for (int kp = 0; kp <= robust_up_to; ++kp) ok &= curves.at({spec.k, key, kp}) <= 0.05;
      if (spec.k == 10)
        for (int kp = robust_up_to; kp < 5; ++kp)
          ok &= curves.at({spec.k, key, kp}) < curves.at({spec.k, key, kp + 1});
    }
    const fs::path frozen = kFixtures / spec.fixture;
    const bool matches = fs::exists(frozen) && slurp(frozen) == produced;
    if (!matches) detail += fmt("fixture %s differs; ", spec.fixture);
    ok &= matches;
  }
  const double secs = seconds_since(t0);
  ok &= secs < 300.0;
  return {ok, detail + fmt("frozen fixtures checked, %.2f s", secs)};
}

Outcome ac5() {
  const fs::path dir = scratch("ac5");
  const std::string out =
      capture(kCli + " bound --thm3 --eta 0.1 --m 2 --alpha 0.5 --T 20 --out " + dir.string() + " 2>/dev/null");
  double delta = -1.0;
  try {
    delta = json::parse(out).at("delta").get<double>();
  } catch (const std::exception&) {
    return {false, "could not parse CLI output"};
  }
  return {std::abs(delta - 0.0214) <= 1e-4, fmt("bound --thm3 eta=0.1 m=2 alpha=0.5 T=20 -> delta = %.6f", delta)};
}

Outcome ac6() {
  const auto t0 = Clock::now();
  std::vector<Role> roles(10, Role::BenignRelevant);
  roles[0] = Role::Malicious;
  const auto set = make_retrieval_set(roles, Uniform{});  // eta = 0.1
  constexpr int kRuns = 100000;
  constexpr int kT = 20;
  std::uint64_t clean = 0, failures = 0;
  for (int run = 0; run < kRuns; ++run) {
    int poisoned = 0;
    for (const Context& c : sample_contexts(set, {kT, 2, Uniform{}, rng::derive(606, {static_cast<std::uint64_t>(run)})})) {
      clean += c.clean;
      poisoned += !c.clean;
    }
    failures += 2 * poisoned >= kT;
  }
  const std::uint64_t rounds = static_cast<std::uint64_t>(kRuns) * kT;
  const double frac = static_cast<double>(clean) / static_cast<double>(rounds);
  const double se = stats::standard_error(0.81, rounds);
  const double fail_freq = static_cast<double>(failures) / kRuns;
  const double delta = thm3_failure_prob({0.1, 2, 0.5, kT}).delta;
  const double secs = seconds_since(t0);
  return {std::abs(frac - 0.81) <= 3 * se && fail_freq <= delta && secs < 120.0,
          fmt("clean fraction %.5f over %llu rounds (|diff| %.2f SE); failure frequency %.5f <= delta %.4f, %.2f s",
              frac, static_cast<unsigned long long>(rounds), std::abs(frac - 0.81) / se, fail_freq, delta, secs)};
}

Outcome ac7() {
  const auto t0 = Clock::now();
  int cells = 0, dominated = 0;
  double worst_gap = -1.0;
  std::string worst;
  for (int k : {10, 15, 20, 25, 30})
    for (int kp : {1, k / 5})
      for (double e2 : {0.05, 0.1}) {
        const InclusionBoundParams p{k, kp, 0.5 * 0.25 / (k - kp), e2, 0.25, 0.5};
        if (!thm1_regime_check(p).ok) return {false, fmt("cell k=%d k'=%d eps2=%g fails the regime check", k, kp, e2)};
        const double bound = thm1_failure_bound(p).total;
        SimScenario s;
        s.k = k;
        s.eps1 = p.eps1;
        s.eps2 = e2;
        s.attack = SuffixAttack{kp};
        s.trials = 5000;
        s.seed = 7;
        const double emp = run_scenario(s).p_malicious_in_mis();
        const double se = stats::standard_error(std::min(bound, 1.0), 5000);
        ++cells;
        dominated += emp <= bound + 3 * se;
        if (emp - bound > worst_gap) {
          worst_gap = emp - bound;
          worst = fmt("k=%d k'=%d eps2=%g: empirical %.4f vs bound %.4f", k, kp, e2, emp, bound);
        }
      }
  const double secs = seconds_since(t0);
  return {cells == 20 && dominated == cells && secs < 600.0,
          fmt("%d/%d regime cells dominated; tightest %s, %.2f s", dominated, cells, worst.c_str(), secs)};
}

Outcome ac8() {
  const auto t0 = Clock::now();
  constexpr int kTrials = 100000;
  std::vector<RobustnessEstimate> est;
  for (int pos : {1, 25, 50}) {
    SimScenario s;
    s.k = 50;
    s.eps1 = 0.05;
    s.eps2 = 0.2;
    s.scheme = Exponential{0.9};
    s.pipeline = SamplingPipeline{20, 2};
    s.attack = RolePlacement{{pos}};
    s.trials = kTrials;
    s.seed = 8;
    est.push_back(run_scenario(s, static_cast<int>(std::max(1u, std::thread::hardware_concurrency()))));
  }
  auto se = [](const stats::Proportion& p) { return stats::standard_error(p.estimate(), p.trials); };
  bool ok = true;
  for (auto metric : {&RobustnessEstimate::malicious_in_chosen, &RobustnessEstimate::asr}) {
    for (std::size_t i = 0; i + 1 < est.size(); ++i) {
      const auto& a = est[i].*metric;
      const auto& b = est[i + 1].*metric;
      ok &= b.estimate() <= a.estimate() + 2 * std::hypot(se(a), se(b));
    }
    const auto& first = est.front().*metric;
    const auto& last = est.back().*metric;
    ok &= first.estimate() - last.estimate() >= 2 * std::hypot(se(first), se(last));
  }
  const double secs = seconds_since(t0);
  ok &= secs < 300.0;
  return {ok, fmt("positions 1/25/50: p_chosen %.5f/%.5f/%.5f, asr %.5f/%.5f/%.5f, %.2f s",
                  est[0].p_malicious_in_chosen(), est[1].p_malicious_in_chosen(), est[2].p_malicious_in_chosen(),
                  est[0].asr.estimate(), est[1].asr.estimate(), est[2].asr.estimate(), secs)};
}

Outcome ac9() {
  const fs::path dir = scratch("ac9");
  const std::string fig1 = (kFixtures / "fig1.json").string();
  auto out = [&](const char* name) { return (dir / name).string(); };
  bool ok = true;
  std::string detail;
  auto same = [&](const std::string& a, const std::string& b, const char* file) {
    const bool eq = fs::exists(fs::path(a) / file) && slurp(fs::path(a) / file) == slurp(fs::path(b) / file);
    if (!eq) detail += fmt("%s differs between %s and %s; ", file, a.c_str(), b.c_str());
    ok &= eq;
  };
  const std::string sim = " simulate --k 12 --eps1 0.05 --eps2 0.2 0.4 --attack suffix --trials 2000 --seed 31 --audit";
  ok &= sh(kCli + sim + " --workers 1 --out " + out("w1")) == 0;
  ok &= sh(kCli + sim + " --workers 4 --out " + out("w4")) == 0;
  ok &= sh(kCli + " replay --manifest " + out("w4") + "/manifest.json --workers 2 --out " + out("replay")) == 0;
  for (const char* f : {"results.csv", "audit.jsonl"}) {
    same(out("w1"), out("w4"), f);
    same(out("w1"), out("replay"), f);
  }
  const std::string samp = " simulate --pipeline sampling --k 20 --positions 1 10 --attack position --trials 500 --seed 5";
  ok &= sh(kCli + samp + " --workers 3 --out " + out("s3")) == 0;
  ok &= sh(kCli + " replay --manifest " + out("s3") + "/manifest.json --workers 1 --out " + out("s3r")) == 0;
  same(out("s3"), out("s3r"), "results.csv");
  ok &= sh(kCli + " select --trace " + fig1 + " --out " + out("sel")) == 0;
  ok &= sh(kCli + " replay --manifest " + out("sel") + "/manifest.json --out " + out("selr")) == 0;
  same(out("sel"), out("selr"), "selection.json");
  ok &= sh(kCli + " bound --thm1 --k 20 --kprime 4 --out " + out("b")) == 0;
  ok &= sh(kCli + " replay --manifest " + out("b") + "/manifest.json --out " + out("br")) == 0;
  same(out("b"), out("br"), "bound.json");
  return {ok, detail.empty() ? "simulate (1 vs 4 workers, replay), sampling simulate, select and bound replays "
                               "are bitwise identical"
                             : detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5},
      {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9}};
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << name << ' ' << (v.pass ? "PASS" : "FAIL") << ' ' << v.detail << std::endl;
  }
  fs::remove_all(fs::temp_directory_path() / "relrag_acceptance");
  return failed == 0 ? 0 : 1;
}
