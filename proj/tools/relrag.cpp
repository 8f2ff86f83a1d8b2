// relrag: rank-aware contradiction filtering for retrieved documents.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "relrag/runner.hpp"

namespace {

void add_common(CLI::App* cmd, relrag::RunConfig& c) {
  cmd->add_option("--out", c.out_dir, "Output directory (default $RELRAG_OUT_DIR or ./relrag-out)");
  cmd->add_option("--seed", c.seed, "Root seed");
}

void add_inputs(CLI::App* cmd, relrag::RunConfig& c) {
  cmd->add_option("--trace", c.trace, "Trace file with recorded judgments and answers")->check(CLI::ExistingFile);
  cmd->add_option("--documents", c.documents, "Document file with role labels")->check(CLI::ExistingFile);
  cmd->add_option("--scheme", c.scheme, "Weight scheme for missing weights");
  cmd->add_option("--eps1", c.judge.eps1, "Benign/benign false contradiction rate");
  cmd->add_option("--eps2", c.judge.eps2, "Benign/malicious missed contradiction rate");
  cmd->add_option("--flip", c.judge.flip_noise, "Edge flip noise");
  cmd->add_option("--beta", c.judge.beta, "Contradiction threshold");
  cmd->add_option("--max-sets", c.max_sets, "Cap on listed co-maximum sets");
}

void add_grid(CLI::App* cmd, relrag::RunConfig& c) {
  auto& g = c.grid;
  cmd->add_option("--preset", g.preset, "Named protocol (mis-malicious)");
  cmd->add_option("--k", g.k, "Retrieval sizes");
  cmd->add_option("--kprime", g.k_prime, "Suffix attack sizes (default 0..k/2)");
  cmd->add_option("--positions", g.positions, "Single-document attack positions");
  cmd->add_option("--eps1", g.eps1, "Benign/benign false contradiction rates");
  cmd->add_option("--eps2", g.eps2, "Benign/malicious missed contradiction rates");
  cmd->add_option("--flip", g.flip_noise, "Edge flip noise levels");
  cmd->add_option("--irrelevance", g.irrelevance_rate, "Irrelevant document rates");
  cmd->add_option("--T", g.rounds, "Sampling rounds");
  cmd->add_option("--m", g.context_size, "Context sizes");
  cmd->add_option("--scheme", g.schemes, "Weight schemes");
  cmd->add_option("--attack", g.attack, "none, suffix or position")
      ->check(CLI::IsMember({"none", "suffix", "position"}));
  cmd->add_option("--pipeline", g.pipeline, "direct or sampling")->check(CLI::IsMember({"direct", "sampling"}));
  cmd->add_option("--trials", g.trials, "Trials per cell");
  cmd->add_option("--workers", c.workers, "Worker threads");
  cmd->add_flag("--audit", c.audit, "Write per-trial JSONL audit stream");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rank-aware maximum independent set filtering for retrieval-augmented generation"};
  app.set_version_flag("--version", RELRAG_VERSION_STRING);
  app.set_config("--config", "", "TOML config file; command-line flags take precedence");
  app.require_subcommand(1);

  relrag::RunConfig c;
  double target = 0.0;

  auto* select = app.add_subcommand("select", "Select the lexicographically first maximum consistent set");
  add_common(select, c);
  add_inputs(select, c);

  auto* sample = app.add_subcommand("sample", "Sample contexts and aggregate them by MIS");
  add_common(sample, c);
  add_inputs(sample, c);
  sample->add_option("--T", c.rounds, "Sampling rounds");
  sample->add_option("--m", c.context_size, "Documents per context");

  auto* bound = app.add_subcommand("bound", "Evaluate the analytic failure bounds");
  add_common(bound, c);
  auto* thm1 = bound->add_flag("--thm1", "Malicious-inclusion bound for direct selection");
  auto* thm3 = bound->add_flag("--thm3", "Failure bound for sample-and-aggregate");
  thm1->excludes(thm3);
  bound->add_option("--k", c.bound.k, "Retrieved documents");
  bound->add_option("--kprime", c.bound.k_prime, "Malicious documents");
  bound->add_option("--eps1", c.bound.eps1, "Benign/benign false contradiction rate");
  bound->add_option("--eps2", c.bound.eps2, "Benign/malicious missed contradiction rate");
  bound->add_option("--mu", c.bound.mu, "Slack parameter in (0, 1/2)");
  bound->add_option("--delta", c.bound.delta, "Chernoff parameter in (0, 1)");
  bound->add_option("--eta", c.bound.eta, "Total malicious weight");
  bound->add_option("--m", c.bound.m, "Documents per context");
  bound->add_option("--alpha", c.bound.alpha, "Aggregator tolerance");
  bound->add_option("--T", c.bound.rounds, "Sampling rounds");
  auto* target_opt = bound->add_option("--target", target, "Also report the minimum T for this failure probability");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo robustness estimates");
  add_common(simulate, c);
  add_grid(simulate, c);

  auto* sweep = app.add_subcommand("sweep", "Resumable Monte Carlo parameter sweep");
  add_common(sweep, c);
  add_grid(sweep, c);
  sweep->add_flag("--resume", c.resume, "Skip cells already present in results.csv");

  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("--manifest", c.manifest, "manifest.json to replay")->required()->check(CLI::ExistingFile);
  replay->add_option("--out", c.out_dir, "Output directory");
  int replay_workers = 0;
  replay->add_option("--workers", replay_workers, "Worker threads (default: as recorded)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (app.exit(e) == 0) return 0;  // --help, --version
    const int code = relrag::exit_code(relrag::ErrorCode::ConfigError);
    const relrag::json report{{"error", {{"code", "ConfigError"}, {"message", e.what()}, {"exit_code", code}}}};
    std::cerr << report.dump(2) << '\n';
    return code;
  }

  if (select->parsed()) c.command = relrag::Command::Select;
  else if (sample->parsed()) c.command = relrag::Command::Sample;
  else if (bound->parsed()) c.command = relrag::Command::Bound;
  else if (simulate->parsed()) c.command = relrag::Command::Simulate;
  else if (sweep->parsed()) c.command = relrag::Command::Sweep;
  else c.command = relrag::Command::Replay;

  if (c.command == relrag::Command::Bound) {
    c.bound.kind = thm1->count() ? "thm1" : "thm3";
    if (target_opt->count()) c.bound.target_delta = target;
  }
  if (c.command == relrag::Command::Replay) c.workers = replay_workers;

  return relrag::run(c).exit_code;
}
