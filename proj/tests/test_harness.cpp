#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include <json.hpp>

#include "permitbft/fuzz.hpp"
#include "permitbft/liveness.hpp"
#include "permitbft/metrics.hpp"
#include "permitbft/oracle.hpp"
#include "permitbft/report.hpp"
#include "permitbft/simulator.hpp"
#include "permitbft/trace.hpp"
#include "scenario_builder.hpp"
#include "support.hpp"

using namespace permitbft;
using permitbft::testing::base_scenario;
using permitbft::testing::Fixture;
using permitbft::testing::pay;
using permitbft::testing::pos;
using permitbft::testing::scenario_of;

namespace {

std::set<NodeId> everyone(std::uint32_t n) {
  std::set<NodeId> out;
  for (std::uint32_t i = 0; i < n; ++i) out.insert(NodeId{i});
  return out;
}

bool has(const std::vector<Violation>& vs, ViolationKind kind) {
  return std::any_of(vs.begin(), vs.end(), [kind](const Violation& v) { return v.kind == kind; });
}

}  // namespace

TEST_CASE("scenario loading accepts valid files and rejects bad parameters") {
  auto doc = base_scenario(4);
  doc["byzantine"].push_back({{"node", 3}, {"strategy", "silent"}});
  const auto s = scenario_of(doc);
  CHECK(s.n == 4);
  CHECK(s.f == 1);
  CHECK_FALSE(s.is_honest(NodeId{3}));
  CHECK(s.byzantine.at(NodeId{3}).kind == StrategyKind::kSilent);

  auto small = base_scenario(4);
  small["n"] = 3;
  CHECK_THROWS_AS(scenario_of(small), ConstraintError);

  auto timers = base_scenario(4);
  timers["timers"]["creator_timeout"] = 3500;
  CHECK_NOTHROW(scenario_of(timers));
  timers["checks"] = {{"liveness", true}};
  CHECK_THROWS_AS(scenario_of(timers), ConstraintError);

  auto too_many = base_scenario(4);
  too_many["byzantine"] = {{{"node", 1}, {"strategy", "silent"}}, {{"node", 2}, {"strategy", "silent"}}};
  CHECK_THROWS_AS(scenario_of(too_many), ConstraintError);

  auto unknown = base_scenario(4);
  unknown["byzantine"] = {{{"node", 1}, {"strategy", "teleport"}}};
  CHECK_THROWS_WITH_AS(scenario_of(unknown), doctest::Contains("byzantine[0].strategy"), ParseError);

  auto bad_ref = base_scenario(4);
  bad_ref["txs"] = {{{"at", 1}, {"to", 0}, {"inputs", {{{"tx", "later"}}}}, {"outputs", nlohmann::json::array()}}};
  CHECK_THROWS_AS(scenario_of(bad_ref), ParseError);

  CHECK_THROWS_WITH_AS(parse_scenario("{\n  \"n\": 4,\n  \"f\": \n}"), doctest::Contains("line 4"), ParseError);
  CHECK_THROWS_AS(parse_scenario("{\"n\": 4}"), ParseError);
}

TEST_CASE("scenario digests track content") {
  auto a = base_scenario(4);
  auto b = base_scenario(4);
  CHECK(scenario_of(a).digest == scenario_of(b).digest);
  b["horizon"] = 1234;
  CHECK(scenario_of(a).digest != scenario_of(b).digest);
}

TEST_CASE("seed precedence is flag, then environment, then file") {
  auto doc = base_scenario(4);
  doc["seed"] = 11;
  const auto s = scenario_of(doc);
  ::unsetenv("PERMITBFT_SEED");
  CHECK(resolve_seed(s, std::nullopt) == 11);
  ::setenv("PERMITBFT_SEED", "22", 1);
  CHECK(resolve_seed(s, std::nullopt) == 22);
  CHECK(resolve_seed(s, 33) == 33);
  ::setenv("PERMITBFT_SEED", "x", 1);
  CHECK_THROWS_AS(resolve_seed(s, std::nullopt), ParseError);
  ::unsetenv("PERMITBFT_SEED");
}

TEST_CASE("the oracle accepts optimistic growth at every step") {
  auto doc = base_scenario(4);
  doc["txs"].push_back(pay("p", 300, 1, 0, "bob"));
  doc["checks"] = {{"safety", true}};
  auto run = run_scenario(scenario_of(doc), 4);
  CHECK(run.violations.empty());
  CHECK_FALSE(run.oracle->promised().empty());
  // Every committed block is promised.
  const auto& dag = run.oracle->dag();
  for (std::size_t i = 0; i < dag.size(); ++i) {
    if (dag.committed_at(i)) CHECK(run.oracle->promised().count(dag.block_at(i).id()) == 1);
  }
}

TEST_CASE("the oracle flags fabricated independent commitment and promises") {
  auto alice = Transaction::mint("alice", 10, 0);
  Fixture fx(4, {alice});
  const auto g = Position::of(fx.genesis.id());
  auto a = permitbft::testing::spend(alice, 0, "a");
  auto b = permitbft::testing::spend(alice, 0, "b");
  auto b1 = fx.block(1, g, {a});
  auto b2 = fx.block(1, g, {b});
  auto c1 = fx.block(2, Position::of(b1.id()));
  auto c2 = fx.block(3, Position::of(b2.id()));

  SafetyOracle oracle(fx.committee, fx.genesis, everyone(4));
  oracle.force_promise(Round{0}, g);
  for (const auto& blk : {b1, b2}) oracle.observe_block(blk);
  oracle.force_promise(Round{1}, Position::of(b1.id()));
  CHECK(oracle.check().empty());

  oracle.observe_block(c2);  // arrives before its sibling's child; fine on its own
  auto vs = oracle.check();
  CHECK(has(vs, ViolationKind::kCommittedNotPromised));
  CHECK_FALSE(has(vs, ViolationKind::kIndependentlyCommitted));

  oracle.observe_block(c1);
  vs = oracle.check();
  CHECK(has(vs, ViolationKind::kIndependentlyCommitted));
  CHECK(has(vs, ViolationKind::kConflictingCommitted));

  oracle.force_promise(Round{2}, Position::of(b2.id()));
  vs = oracle.check();
  CHECK(has(vs, ViolationKind::kIndependentlyPromised));
}

TEST_CASE("the oracle counts unsafe permits and single voice") {
  Fixture fx;
  const auto g = Position::of(fx.genesis.id());
  auto b1 = fx.block(1, g, {Transaction::mint("v", 0, 1)});
  auto b2 = fx.block(1, g, {Transaction::mint("v", 0, 2)});
  SafetyOracle oracle(fx.committee, fx.genesis, {NodeId{0}, NodeId{1}, NodeId{2}});
  CHECK(oracle.promise_threshold() == 2);
  oracle.force_promise(Round{0}, g);
  oracle.observe_block(b1);
  oracle.observe_block(b2);
  // f+1 honest permits promise b1.
  oracle.observe_permit(NodeId{0}, fx.permit(0, 2, Position::of(b1.id())));
  oracle.observe_permit(NodeId{1}, fx.permit(1, 2, Position::of(b1.id())));
  CHECK(oracle.promised().count(b1.id()) == 1);
  CHECK(oracle.check().empty());

  // One honest permit ignoring b1 is tolerated, a second is not.
  oracle.observe_permit(NodeId{2}, fx.permit(2, 3, Position::of(b2.id())));
  CHECK(oracle.check().empty());
  oracle.observe_permit(NodeId{1}, fx.permit(1, 3, Position::of(b2.id())));
  CHECK(has(oracle.check(), ViolationKind::kUnsafePermits));

  oracle.observe_permit(NodeId{0}, fx.permit(0, 3, Position::of(b1.id())));
  oracle.observe_permit(NodeId{0}, fx.permit(0, 3, pos({b1.id(), b2.id()})));
  CHECK(has(oracle.check(), ViolationKind::kDoubleVoice));

  oracle.observe_timeout(NodeId{1}, Round{4});
  oracle.observe_timeout(NodeId{1}, Round{4});
  CHECK(has(oracle.check(), ViolationKind::kDoubleVoice));

  oracle.observe_round(NodeId{2}, Round{5});
  oracle.observe_round(NodeId{2}, Round{5});
  CHECK(has(oracle.check(), ViolationKind::kRoundRegression));
}

TEST_CASE("late permits answer only to promises of their own round or earlier") {
  Fixture fx;
  const auto g = Position::of(fx.genesis.id());
  auto b1 = fx.block(1, g, {Transaction::mint("v", 0, 1)});
  auto b2 = fx.block(1, g, {Transaction::mint("v", 0, 2)});
  SafetyOracle oracle(fx.committee, fx.genesis, {NodeId{0}, NodeId{1}, NodeId{2}});
  oracle.force_promise(Round{0}, g);
  oracle.observe_block(b1);
  oracle.observe_block(b2);
  oracle.force_promise(Round{5}, Position::of(b2.id()));
  // Round 2 permits that ignore b2 are still safe for round 2.
  oracle.observe_permit(NodeId{0}, fx.permit(0, 2, Position::of(b1.id())));
  oracle.observe_permit(NodeId{1}, fx.permit(1, 2, Position::of(b1.id())));
  oracle.observe_permit(NodeId{2}, fx.permit(2, 2, Position::of(b1.id())));
  CHECK(oracle.unsafe_permits().empty());
  // The same position in round 6 is judged against b2.
  oracle.observe_permit(NodeId{0}, fx.permit(0, 6, Position::of(b1.id())));
  oracle.observe_permit(NodeId{1}, fx.permit(1, 6, Position::of(b1.id())));
  CHECK(has(oracle.check(), ViolationKind::kUnsafePermits));
}

TEST_CASE("the promise threshold is a quorum minus the faulty nodes") {
  for (std::uint32_t n : {4u, 7u, 10u}) {
    Fixture fx(n);
    const auto f = fx.f;
    for (std::uint32_t faulty = 0; faulty <= f; ++faulty) {
      std::set<NodeId> honest;
      for (std::uint32_t i = faulty; i < n; ++i) honest.insert(NodeId{i});
      SafetyOracle oracle(fx.committee, fx.genesis, honest);
      CHECK(oracle.promise_threshold() == 2 * f + 1 - faulty);
      // Two disjoint honest sets of that size cannot fit in the honest nodes.
      CHECK(2 * oracle.promise_threshold() > honest.size());
    }
  }
}

TEST_CASE("byzantine permits are outside the oracle's count") {
  Fixture fx;
  const auto g = Position::of(fx.genesis.id());
  auto b1 = fx.block(1, g);
  SafetyOracle oracle(fx.committee, fx.genesis, {NodeId{0}, NodeId{1}, NodeId{2}});
  oracle.observe_block(b1);
  oracle.observe_permit(NodeId{3}, fx.permit(3, 2, Position::of(b1.id())));
  oracle.observe_permit(NodeId{0}, fx.permit(0, 2, Position::of(b1.id())));
  CHECK(oracle.promised().count(b1.id()) == 0);
}

TEST_CASE("double spend across merged siblings ends frozen without violations") {
  auto s = load_scenario(PERMITBFT_SCENARIO_DIR "/double_spend_freeze.json");
  auto run = run_scenario(s, s.seed);
  CHECK(run.violations.empty());
  const auto& ledger = run.oracle->ledger();
  std::map<std::string, TxId> ids;
  for (const auto& t : run.txs) ids.emplace(t.label, t.id);
  CHECK(ledger.committed.count(ids.at("to-carol")) == 0);
  CHECK(ledger.committed.count(ids.at("to-dave")) == 0);
  CHECK(ledger.frozen == std::set<OutputRef>{{s.mints[0].id(), 0}});
  CHECK(ledger.committed.count(ids.at("unrelated")) == 1);
  const auto start = genesis_state(s.genesis());
  const auto end = execute(ledger, start);
  CHECK(end.spendable_total() + end.frozen_total() == start.spendable_total());
  CHECK(end.frozen_total() == 100);
}

TEST_CASE("liveness: a silent node delays but does not stop commitment") {
  auto doc = base_scenario(4);
  doc["byzantine"].push_back({{"node", 3}, {"strategy", "silent"}});
  doc["checks"] = {{"liveness", true}};
  doc["horizon"] = 60000;
  const auto s = scenario_of(doc);
  auto run = run_scenario(s, 21);
  auto rep = check_liveness(s, run);
  CHECK(rep.ok);
  REQUIRE(rep.rounds_to_commit.has_value());
  CHECK(*rep.rounds_to_commit <= 6);
  CHECK(rep.window == 9);
  CHECK(rep.unification_checked > 0);
  CHECK(rep.unification_failed == 0);
  CHECK(rep.progress_failed == 0);
}

TEST_CASE("liveness: all-honest synchronous runs create a block every round") {
  auto doc = base_scenario(7);
  doc["checks"] = {{"liveness", true}};
  doc["horizon"] = 50000;
  const auto s = scenario_of(doc);
  auto run = run_scenario(s, 8);
  CHECK(check_liveness(s, run).ok);
  std::set<std::uint64_t> blocks;
  std::uint64_t top = 0;
  for (const auto& c : run.creations) {
    CHECK(c.is_block);
    blocks.insert(c.round.value);
    top = std::max(top, c.round.value);
  }
  CHECK(blocks.size() == top + 1);
  CHECK(top > 10);
}

TEST_CASE("liveness reports missing synchronous windows") {
  auto doc = base_scenario(4);
  doc["checks"] = {{"liveness", true}};
  doc["phases"] = nlohmann::json::array({{{"start", 0}, {"end", 25000}, {"mode", "async"}}});
  const auto s = scenario_of(doc);
  auto rep = check_liveness(s, run_scenario(s, 1));
  CHECK_FALSE(rep.ok);
  CHECK_FALSE(rep.failures.empty());
}

TEST_CASE("creator placement sweep agrees with a bitmask enumeration") {
  for (std::uint32_t n : {4, 7, 10, 13}) {
    const std::uint32_t f = (n - 1) / 3;
    std::uint64_t placements = 0;
    std::uint64_t passed = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      if (static_cast<std::uint32_t>(__builtin_popcount(mask)) != f) continue;
      ++placements;
      bool all = true;
      for (std::uint32_t s = 0; s < n; ++s) {
        // Unroll the circle as a string of n+2 creators and look for "hhh".
        std::string w;
        for (std::uint32_t r = s; r < s + n + 2; ++r) w += (mask >> (r % n)) & 1 ? 'b' : 'h';
        all = all && w.find("hhh") != std::string::npos;
      }
      passed += all ? 1 : 0;
    }
    const auto sweep = sweep_creator_placements(n);
    CHECK(sweep.placements == placements);
    CHECK(sweep.passed == passed);
    CHECK(sweep.passed == sweep.placements);
  }
  CHECK_FALSE(has_honest_triple({false, true, false, true, false, true}, 0));
  CHECK(has_honest_triple({false, false, false, true}, 0));
}

TEST_CASE("optimistic latency is two delays and rounds stay linear") {
  auto s = load_scenario(PERMITBFT_SCENARIO_DIR "/optimistic.json");
  auto run = run_scenario(s, s.seed);
  auto m = collect_metrics(s, run);
  REQUIRE(m.latencies.size() == 1);
  CHECK(m.latencies[0] == 2.0);
  bool saw_failure = false;
  for (const auto& r : m.rounds) {
    if (r.block_round) CHECK(r.total <= 2 * s.n + 2);
    if (r.failure_round) {
      saw_failure = true;
      CHECK(r.total >= s.n);
      CHECK(r.total <= 3 * s.n * s.n);
    }
  }
  CHECK(saw_failure);
}

TEST_CASE("quadratic fit recovers exact coefficients") {
  std::vector<double> xs{4, 7, 10, 13};
  std::vector<double> ys;
  for (auto x : xs) ys.push_back(2 * x * x - 3 * x + 5);
  auto fit = fit_quadratic(xs, ys);
  CHECK(fit.a == doctest::Approx(2).epsilon(1e-9));
  CHECK(fit.b == doctest::Approx(-3).epsilon(1e-9));
  CHECK(fit.c == doctest::Approx(5).epsilon(1e-9));
  CHECK(fit.max_abs_residual < 1e-9);
  auto sum = summarize({1, 2, 6});
  CHECK(sum.count == 3);
  CHECK(sum.min == 1);
  CHECK(sum.max == 6);
  CHECK(sum.mean == 3);
}

TEST_CASE("reports render as json and csv") {
  auto s = load_scenario(PERMITBFT_SCENARIO_DIR "/optimistic.json");
  auto run = run_scenario(s, s.seed);
  auto rec = make_record(s, run, collect_metrics(s, run), std::nullopt);
  auto json = nlohmann::json::parse(render_report({rec, rec}, ReportFormat::kJson));
  REQUIRE(json.is_array());
  CHECK(json.size() == 2);
  CHECK(json[0]["seed"] == s.seed);
  CHECK(json[0]["trace_digest"] == run.trace_digest.hex());
  const auto csv = render_report({rec}, ReportFormat::kCsv);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  const auto plot = render_plot({rec});
  CHECK(plot.starts_with("# seed latency_mean latency_max\n"));
}

TEST_CASE("trace headers round-trip") {
  const auto d = sha256("scenario");
  const auto h = parse_header(header_line(d, 99, 7, 2));
  CHECK(h.scenario == d);
  CHECK(h.seed == 99);
  CHECK(h.n == 7);
  CHECK(h.f == 2);
  CHECK_THROWS_AS(parse_header("0 0 node0 start"), std::invalid_argument);

  TraceWriter w(true);
  w.header(d, 1, 4, 1);
  w.record(5, 1, "node0", "start", Digest{}, "");
  const auto digest = w.finish();
  REQUIRE(w.lines().size() == 2);
  CHECK(w.lines()[1] == "5 1 node0 start 0000000000000000 -");
  TraceWriter quiet(false);
  quiet.header(d, 1, 4, 1);
  quiet.record(5, 1, "node0", "start", Digest{}, "");
  CHECK(quiet.finish() == digest);
  CHECK(quiet.lines().empty());
  CHECK(quiet.count() == 2);
}

TEST_CASE("an adversary beyond the fault budget is caught and the run stops") {
  // Two byzantine nodes out of four: quorums no longer need an honest majority.
  auto doc = base_scenario(4);
  doc["txs"] = {pay("x", 0, 0, 0, "b"), pay("y", 0, 1, 0, "c")};
  doc["byzantine"].push_back({{"node", 0}, {"strategy", "withhold_from"}, {"targets", {3}}});
  auto s = scenario_of(doc);
  AdversaryStrategy second;
  second.kind = StrategyKind::kEquivocateBlocks;
  second.groups = {{NodeId{3}}, {NodeId{0}, NodeId{2}}};
  second.variant_txs = {{s.txs[0].tx}, {s.txs[1].tx}};
  s.byzantine[NodeId{1}] = second;

  RunOptions opt;
  opt.keep_trace = true;
  auto run = run_scenario(s, 1, opt);
  REQUIRE_FALSE(run.violations.empty());
  REQUIRE(run.violation_time.has_value());
  CHECK(run.end_time == *run.violation_time);
  REQUIRE_FALSE(run.violation_context.empty());
  CHECK(run.violation_context.back().find("oracle violation.") != std::string::npos);
  CHECK(run.trace.back() == run.violation_context.back());

  // Reproducible from (scenario, seed).
  auto again = run_scenario(s, 1);
  CHECK(again.trace_digest == run.trace_digest);
  CHECK(again.violations.front().detail == run.violations.front().detail);

  // Without stopping the run goes on to the horizon.
  RunOptions full;
  full.stop_on_violation = false;
  auto longer = run_scenario(s, 1, full);
  CHECK(longer.events > run.events);
}

TEST_CASE("fuzz scenarios parse and runs are independent of thread count") {
  FuzzConfig cfg;
  cfg.runs = 12;
  cfg.base_seed = 500;
  cfg.horizon = 20000;
  for (std::uint64_t seed = 500; seed < 512; ++seed) CHECK_NOTHROW(parse_scenario(random_scenario(seed, cfg)));
  cfg.jobs = 1;
  auto one = run_fuzz(cfg);
  cfg.jobs = 3;
  auto three = run_fuzz(cfg);
  REQUIRE(one.runs.size() == 12);
  REQUIRE(three.runs.size() == 12);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(one.runs[i].seed == 500 + i);
    CHECK(one.runs[i].trace_digest == three.runs[i].trace_digest);
    CHECK(one.runs[i].error.empty());
    CHECK(one.runs[i].violations.empty());
  }
  CHECK(one.failed_runs == 0);
}
