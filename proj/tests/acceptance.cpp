// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "permitbft/fuzz.hpp"
#include "permitbft/ledger.hpp"
#include "permitbft/liveness.hpp"
#include "permitbft/metrics.hpp"
#include "permitbft/scenario.hpp"
#include "permitbft/simulator.hpp"
#include "scenario_builder.hpp"
#include "support.hpp"

using namespace permitbft;
using permitbft::testing::base_scenario;
using permitbft::testing::pay;
using permitbft::testing::scenario_of;

namespace {

// Runtime limits in seconds.
constexpr double kLatencyLimit = 1;
constexpr double kMessagesLimit = 10;
constexpr double kFuzzLimit = 300;
constexpr double kLivenessLimit = 5;
constexpr double kPlacementLimit = 5;
constexpr double kOracleLimit = 30;
constexpr double kDeterminismLimit = 30;
constexpr double kFrozenLimit = 1;

constexpr double kExpectedLatency = 2.0;  // delay units, exact
constexpr std::uint64_t kFuzzRuns = 1000;
constexpr std::uint64_t kRandomDags = 200;
constexpr std::uint64_t kDeterminismSeeds = 50;

struct Outcome {
  bool ok = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, double limit, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs >= limit) {
    out.ok = false;
    out.detail += " runtime over " + std::to_string(limit) + "s";
  }
  if (!out.ok) ++failures;
  std::printf("%s %d %s: %s (%.2fs)\n", out.ok ? "PASS" : "FAIL", id, name.c_str(), out.detail.c_str(), secs);
  std::fflush(stdout);
}

/// The optimistic setup at size n: one silent non-creator, fixed delays.
Scenario optimistic(std::uint32_t n) {
  auto doc = base_scenario(n, "fixed");
  doc["byzantine"].push_back({{"node", n - 1}, {"strategy", "silent"}});
  doc["txs"].push_back(pay("pay", 3000, 1, 0, "bob"));
  doc["horizon"] = 20000 + 1000 * n;
  doc["checks"] = {{"safety", true}};
  return scenario_of(doc);
}

Outcome latency() {
  auto s = load_scenario(PERMITBFT_SCENARIO_DIR "/optimistic.json");
  auto run = run_scenario(s, s.seed);
  auto m = collect_metrics(s, run);
  if (!run.violations.empty()) return {false, "oracle violation"};
  if (m.latencies.size() != 1) return {false, std::to_string(m.latencies.size()) + " latencies measured"};
  std::ostringstream d;
  d << "latency " << m.latencies[0] << " delays";
  return {m.latencies[0] == kExpectedLatency, d.str()};
}

Outcome messages() {
  Outcome out;
  std::ostringstream d;
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::uint32_t n : {4u, 7u, 10u, 13u}) {
    const auto s = optimistic(n);
    const auto f = (n - 1) / 3;
    auto run = run_scenario(s, s.seed);
    auto m = collect_metrics(s, run);
    std::uint64_t block_max = 0;
    std::uint64_t fail_min = UINT64_MAX;
    std::uint64_t fail_max = 0;
    std::size_t block_rounds = 0;
    std::size_t fail_rounds = 0;
    for (const auto& r : m.rounds) {
      if (r.block_round) {
        ++block_rounds;
        block_max = std::max(block_max, r.total);
      }
      if (r.failure_round) {
        ++fail_rounds;
        fail_min = std::min(fail_min, r.total);
        fail_max = std::max(fail_max, r.total);
      }
    }
    const bool ok = run.violations.empty() && block_rounds > 0 && fail_rounds > 0 && block_max <= 2 * n + 2 &&
                    fail_min >= 2 * f + 1 && fail_max <= 3 * n * n;
    out.ok = out.ok && ok;
    d << "n=" << n << " block<=" << block_max << "/" << 2 * n + 2;
    if (fail_rounds > 0) d << " failure in [" << fail_min << "," << fail_max << "]/[" << 2 * f + 1 << "," << 3 * n * n << "]";
    d << "; ";
    xs.push_back(n);
    ys.push_back(static_cast<double>(fail_max));
  }
  const auto fit = fit_quadratic(xs, ys);
  char buf[128];
  std::snprintf(buf, sizeof buf, "failure fit %.3fn^2%+.3fn%+.3f", fit.a, fit.b, fit.c);
  d << buf;
  out.detail = d.str();
  return out;
}

Outcome fuzz() {
  FuzzConfig config;
  config.runs = kFuzzRuns;
  config.base_seed = 1;
  config.sizes = {4, 7};
  const auto summary = run_fuzz(config);
  std::size_t blocks = 0;
  std::size_t frozen = 0;
  std::string first;
  for (const auto& r : summary.runs) {
    blocks += r.blocks;
    frozen += r.frozen_refs;
    if (first.empty() && (!r.violations.empty() || !r.error.empty())) {
      first = " first seed " + std::to_string(r.seed) + " " +
              (r.error.empty() ? std::string(to_string(r.violations[0].kind)) : r.error);
    }
  }
  return {summary.failed_runs == 0 && summary.runs.size() == kFuzzRuns,
          std::to_string(summary.runs.size()) + " runs, " + std::to_string(summary.failed_runs) + " failed, " +
              std::to_string(blocks) + " blocks, " + std::to_string(frozen) + " frozen refs" + first};
}

Outcome liveness() {
  Outcome out;
  std::ostringstream d;
  for (std::uint32_t n : {4u, 7u}) {
    const auto f = (n - 1) / 3;
    std::uint64_t worst = 0;
    std::size_t placements = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      if (static_cast<std::uint32_t>(__builtin_popcount(mask)) != f) continue;
      auto doc = base_scenario(n);
      for (std::uint32_t i = 0; i < n; ++i) {
        if (mask & (1u << i)) doc["byzantine"].push_back({{"node", i}, {"strategy", "silent"}});
      }
      doc["checks"] = {{"liveness", true}};
      doc["horizon"] = (n + 8) * 5500;
      const auto s = scenario_of(doc);
      auto run = run_scenario(s, 100 + mask);
      auto rep = check_liveness(s, run);
      ++placements;
      const bool ok = run.violations.empty() && rep.ok && rep.rounds_to_commit && *rep.rounds_to_commit <= n + 5;
      if (!ok) {
        out.ok = false;
        d << "n=" << n << " mask=" << mask << " failed; ";
      }
      if (rep.rounds_to_commit) worst = std::max(worst, *rep.rounds_to_commit);
    }
    d << "n=" << n << " " << placements << " placements, worst " << worst << "/" << n + 5 << " rounds; ";
  }
  out.detail = d.str();
  return out;
}

Outcome placements() {
  Outcome out;
  std::ostringstream d;
  for (std::uint32_t n : {4u, 7u, 10u, 13u}) {
    const auto sweep = sweep_creator_placements(n);
    out.ok = out.ok && sweep.placements > 0 && sweep.passed == sweep.placements;
    d << "n=" << n << " " << sweep.passed << "/" << sweep.placements << "; ";
  }
  out.detail = d.str();
  return out;
}

Outcome oracles() {
  std::uint64_t dags = 0;
  std::uint64_t queries = 0;
  std::uint64_t mismatches = 0;
  for (std::uint64_t seed = 1; dags < kRandomDags; ++seed) {
    auto r = permitbft::testing::random_dag(seed);
    auto dag = permitbft::testing::build(r);
    permitbft::testing::BruteDag brute(r.fx.genesis, r.blocks);
    ++dags;
    if (committed_transactions(dag) != brute.committed_txs()) ++mismatches;
    const auto ids = dag.ids();
    std::mt19937_64 rng(seed);
    for (int q = 0; q < 8; ++q) {
      std::vector<Position> inputs;
      const auto k = 1 + rng() % 3;
      for (std::uint64_t j = 0; j < k; ++j) {
        std::vector<BlockId> members{ids[rng() % ids.size()]};
        if (rng() % 3 == 0) members.push_back(ids[rng() % ids.size()]);
        inputs.emplace_back(members);
      }
      ++queries;
      if (minimal_position(dag, inputs) != brute.minimal(inputs)) ++mismatches;
    }
  }
  return {mismatches == 0, std::to_string(dags) + " dags, " + std::to_string(queries) + " position queries, " +
                               std::to_string(mismatches) + " mismatches"};
}

Outcome determinism() {
  FuzzConfig config;
  std::uint64_t differing = 0;
  for (std::uint64_t seed = 1; seed <= kDeterminismSeeds; ++seed) {
    const auto a = fuzz_one(seed, config);
    const auto b = fuzz_one(seed, config);
    if (a.trace_digest != b.trace_digest || a.events != b.events) ++differing;
  }
  return {differing == 0, std::to_string(kDeterminismSeeds) + " seeds, " + std::to_string(differing) + " differing"};
}

Outcome frozen() {
  auto s = load_scenario(PERMITBFT_SCENARIO_DIR "/double_spend_freeze.json");
  auto run = run_scenario(s, s.seed);
  const auto& ledger = run.oracle->ledger();
  std::map<std::string, const TxRecord*> by_label;
  for (const auto& t : run.txs) by_label.emplace(t.label, &t);
  const auto* carol = by_label.at("to-carol");
  const auto* dave = by_label.at("to-dave");
  std::set<OutputRef> contested;
  for (const auto& tx : s.txs) {
    if (tx.label == "to-carol" || tx.label == "to-dave") {
      for (const auto& in : tx.tx.inputs()) contested.insert(in);
    }
  }
  const auto start = genesis_state(s.genesis());
  const auto end = execute(ledger, start);
  const bool conserved = end.spendable_total() + end.frozen_total() == start.spendable_total();
  const bool ok = run.violations.empty() && !ledger.committed.count(carol->id) && !ledger.committed.count(dave->id) &&
                  ledger.frozen == contested && conserved;
  return {ok, std::to_string(ledger.frozen.size()) + " frozen refs, frozen " + std::to_string(end.frozen_total()) +
                  " + spendable " + std::to_string(end.spendable_total()) + " of " +
                  std::to_string(start.spendable_total())};
}

}  // namespace

int main() {
  report(1, "optimistic latency", kLatencyLimit, latency);
  report(2, "message complexity", kMessagesLimit, messages);
  report(3, "safety fuzz", kFuzzLimit, fuzz);
  report(4, "liveness window", kLivenessLimit, liveness);
  report(5, "honest creator runs", kPlacementLimit, placements);
  report(6, "oracle equivalence", kOracleLimit, oracles);
  report(7, "determinism", kDeterminismLimit, determinism);
  report(8, "frozen funds", kFrozenLimit, frozen);
  return failures;
}
