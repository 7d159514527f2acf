#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "permitbft/dag.hpp"
#include "permitbft/fuzz.hpp"
#include "permitbft/ledger.hpp"
#include "permitbft/liveness.hpp"
#include "permitbft/metrics.hpp"
#include "permitbft/report.hpp"
#include "permitbft/simulator.hpp"
#include "permitbft/trace.hpp"

using namespace permitbft;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kViolation = 2;
constexpr int kLiveness = 3;

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& l : lines) out << l << '\n';
}

ReportFormat parse_format(const std::string& f) { return f == "csv" ? ReportFormat::kCsv : ReportFormat::kJson; }

struct RunArgs {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string trace;
  std::string report;
  std::string format = "json";
  std::string plot;
};

int cmd_run(const RunArgs& a) {
  const auto scenario = load_scenario(a.scenario);
  const auto seed = resolve_seed(scenario, a.seed);
  RunOptions opt;
  opt.keep_trace = !a.trace.empty();
  const auto run = run_scenario(scenario, seed, opt);
  const auto metrics = collect_metrics(scenario, run);
  std::optional<LivenessReport> liveness;
  if (scenario.checks.liveness) liveness = check_liveness(scenario, run);

  if (!a.trace.empty()) write_lines(a.trace, run.trace);
  const auto record = make_record(scenario, run, metrics, liveness);
  if (!a.report.empty()) write_file(a.report, render_report({record}, parse_format(a.format)));
  if (!a.plot.empty()) write_file(a.plot, render_plot({record}));

  std::cout << "seed " << seed << " events " << run.events << " blocks " << metrics.blocks << " committed_txs "
            << metrics.committed_txs << " trace " << run.trace_digest.hex() << '\n';
  const auto lat = summarize(metrics.latencies);
  if (lat.count) std::cout << "latency_delta mean " << lat.mean << " max " << lat.max << '\n';
  if (!run.violations.empty()) {
    for (const auto& v : run.violations) std::cout << "VIOLATION " << to_string(v.kind) << ' ' << v.detail << '\n';
    std::cout << "context (last " << run.violation_context.size() << " trace lines):\n";
    for (const auto& l : run.violation_context) std::cout << "  " << l << '\n';
    return kViolation;
  }
  if (liveness) {
    for (const auto& f : liveness->failures) std::cout << "LIVENESS " << f << '\n';
    if (liveness->rounds_to_commit) std::cout << "rounds_to_commit " << *liveness->rounds_to_commit << '\n';
    if (!liveness->ok) return kLiveness;
  }
  return kOk;
}

int cmd_fuzz(std::uint64_t runs, std::uint64_t seed, unsigned jobs, const std::vector<std::uint32_t>& sizes,
             const std::string& report, const std::string& format, const std::string& plot, const std::string& out_dir) {
  FuzzConfig cfg;
  cfg.runs = runs;
  cfg.base_seed = seed;
  cfg.jobs = jobs;
  if (!sizes.empty()) cfg.sizes = sizes;
  const auto summary = run_fuzz(cfg);
  std::vector<RunRecord> records;
  for (const auto& r : summary.runs) {
    RunRecord rec;
    rec.scenario = "fuzz-" + std::to_string(r.seed);
    rec.seed = r.seed;
    rec.trace_digest = r.trace_digest.hex();
    rec.events = r.events;
    for (const auto& v : r.violations) rec.violations.push_back(std::string(to_string(v.kind)) + ": " + v.detail);
    if (!r.error.empty()) rec.violations.push_back("error: " + r.error);
    rec.blocks = r.blocks;
    rec.committed_txs = r.committed_txs;
    rec.frozen_refs = r.frozen_refs;
    records.push_back(std::move(rec));
    if ((!r.violations.empty() || !r.error.empty()) && !out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      write_file(out_dir + "/fuzz-" + std::to_string(r.seed) + ".json", r.scenario + "\n");
    }
  }
  if (!report.empty()) write_file(report, render_report(records, parse_format(format)));
  if (!plot.empty()) write_file(plot, render_plot(records));
  std::cout << "runs " << summary.runs.size() << " failed " << summary.failed_runs << '\n';
  for (const auto& r : summary.runs) {
    for (const auto& v : r.violations) std::cout << "seed " << r.seed << " VIOLATION " << to_string(v.kind) << ' ' << v.detail << '\n';
    if (!r.error.empty()) std::cout << "seed " << r.seed << " ERROR " << r.error << '\n';
  }
  return summary.failed_runs == 0 ? kOk : kViolation;
}

int cmd_creator_runs(const std::vector<std::uint32_t>& sizes) {
  bool ok = true;
  for (auto n : sizes) {
    const auto sweep = sweep_creator_placements(n);
    std::cout << "n " << n << " f " << sweep.f << " placements " << sweep.placements << " passed " << sweep.passed << '\n';
    ok = ok && sweep.passed == sweep.placements;
  }
  return ok ? kOk : kLiveness;
}

int cmd_replay(const std::string& scenario_path, const std::string& trace_path) {
  std::ifstream in(trace_path);
  if (!in) throw std::runtime_error("cannot read " + trace_path);
  std::vector<std::string> recorded;
  for (std::string line; std::getline(in, line);) recorded.push_back(line);
  if (recorded.empty()) throw std::runtime_error("empty trace");
  const auto header = parse_header(recorded.front());
  const auto scenario = load_scenario(scenario_path);
  if (scenario.digest != header.scenario) {
    std::cout << "scenario digest differs from trace header\n";
    return kUsage;
  }
  RunOptions opt;
  opt.keep_trace = true;
  const auto run = run_scenario(scenario, header.seed, opt);
  const auto limit = std::min(recorded.size(), run.trace.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (recorded[i] != run.trace[i]) {
      std::cout << "diverged at line " << i + 1 << "\n  recorded: " << recorded[i] << "\n  replayed: " << run.trace[i] << '\n';
      return kUsage;
    }
  }
  if (recorded.size() != run.trace.size()) {
    std::cout << "length differs: recorded " << recorded.size() << " replayed " << run.trace.size() << '\n';
    return kUsage;
  }
  std::cout << "identical " << run.trace.size() << " lines, digest " << run.trace_digest.hex() << '\n';
  return kOk;
}

int cmd_export(const std::string& scenario_path, std::optional<std::uint64_t> seed_flag, std::optional<std::uint32_t> node,
               const std::string& out, bool ledger) {
  const auto scenario = load_scenario(scenario_path);
  const auto seed = resolve_seed(scenario, seed_flag);
  const auto run = run_scenario(scenario, seed);
  std::string text;
  if (node) {
    // Rebuild the node's view from the global dag restricted to its blocks.
    auto it = run.honest_blocks.find(NodeId{*node});
    if (it == run.honest_blocks.end()) throw std::runtime_error("node " + std::to_string(*node) + " is not honest");
    const auto& global = run.oracle->dag();
    BlockDag view(global.genesis(), global.committee());
    for (std::size_t i = 1; i < global.size(); ++i) {
      if (it->second.count(global.block_at(i).id())) view.insert(global.block_at(i));
    }
    text = ledger ? dump_ledger(linearize(view)) : export_dag(view);
  } else {
    text = ledger ? dump_ledger(run.oracle->ledger()) : export_dag(run.oracle->dag());
  }
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file(out, text);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PermitBFT simulator and checkers"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run one scenario and check it");
  run->add_option("--scenario", run_args.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", run_args.seed, "Seed (overrides PERMITBFT_SEED and the file)");
  run->add_option("--trace", run_args.trace, "Write the trace here");
  run->add_option("--report", run_args.report, "Write the report here");
  run->add_option("--format", run_args.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
  run->add_option("--plot", run_args.plot, "Write latency plot data here");

  std::uint64_t fuzz_runs = 1000;
  std::uint64_t fuzz_seed = 1;
  unsigned fuzz_jobs = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::uint32_t> fuzz_sizes;
  std::string fuzz_report, fuzz_format = "json", fuzz_plot, fuzz_out;
  auto* fuzz = app.add_subcommand("fuzz", "Seeded adversarial runs");
  fuzz->add_option("--runs", fuzz_runs, "Number of runs");
  fuzz->add_option("--seed", fuzz_seed, "First seed");
  fuzz->add_option("--jobs", fuzz_jobs, "Worker threads");
  fuzz->add_option("--nodes", fuzz_sizes, "Committee sizes to draw from")->delimiter(',');
  fuzz->add_option("--report", fuzz_report, "Write the report here");
  fuzz->add_option("--format", fuzz_format, "Report format")->check(CLI::IsMember({"json", "csv"}));
  fuzz->add_option("--plot", fuzz_plot, "Write plot data here");
  fuzz->add_option("--out", fuzz_out, "Directory for failing scenarios");

  std::vector<std::uint32_t> run_sizes{4, 7, 10, 13};
  auto* runs_cmd = app.add_subcommand("check-creator-runs", "Enumerate byzantine creator placements");
  runs_cmd->add_option("--n", run_sizes, "Committee sizes")->delimiter(',');

  std::string replay_scenario, replay_trace;
  auto* replay = app.add_subcommand("replay", "Re-run a trace and compare line by line");
  replay->add_option("--scenario", replay_scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  replay->add_option("--trace", replay_trace, "Recorded trace")->required()->check(CLI::ExistingFile);

  std::string export_scenario, export_out;
  std::optional<std::uint64_t> export_seed;
  std::optional<std::uint32_t> export_node;
  bool export_ledger = false;
  auto* exp = app.add_subcommand("export-dag", "Run a scenario and print the resulting dag");
  exp->add_option("--scenario", export_scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  exp->add_option("--seed", export_seed, "Seed");
  exp->add_option("--node", export_node, "Honest node whose view to export (default: union of all blocks)");
  exp->add_option("--out", export_out, "Output file");
  exp->add_flag("--ledger", export_ledger, "Print the ledger instead of the dag");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*fuzz) return cmd_fuzz(fuzz_runs, fuzz_seed, fuzz_jobs, fuzz_sizes, fuzz_report, fuzz_format, fuzz_plot, fuzz_out);
    if (*runs_cmd) return cmd_creator_runs(run_sizes);
    if (*replay) return cmd_replay(replay_scenario, replay_trace);
    if (*exp) return cmd_export(export_scenario, export_seed, export_node, export_out, export_ledger);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConstraintError& e) {
    std::cerr << "constraint error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
