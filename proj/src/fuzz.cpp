#include "permitbft/fuzz.hpp"

#include <algorithm>
#include <atomic>
#include <random>
#include <thread>

#include <json.hpp>

namespace permitbft {

using nlohmann::json;

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL) {}
  std::uint64_t below(std::uint64_t k) { return gen_() % k; }
  std::int64_t between(std::int64_t lo, std::int64_t hi) { return lo + static_cast<std::int64_t>(below(hi - lo + 1)); }
  bool chance(unsigned percent) { return below(100) < percent; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace

std::string random_scenario(std::uint64_t seed, const FuzzConfig& config) {
  Rng rng(seed);
  const auto n = config.sizes[rng.below(config.sizes.size())];
  const auto f = (n - 1) / 3;
  const Ticks horizon = config.horizon;

  json doc;
  doc["name"] = "fuzz-" + std::to_string(seed);
  doc["n"] = n;
  doc["f"] = f;
  doc["seed"] = seed;
  doc["horizon"] = horizon;
  doc["delay"] = "uniform";
  doc["checks"] = {{"safety", true}};

  std::vector<std::uint32_t> order(n);
  for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
  for (std::uint32_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
  const auto byz_count = rng.chance(85) ? f : static_cast<std::uint32_t>(rng.below(f + 1));
  std::vector<std::uint32_t> byz(order.begin(), order.begin() + byz_count);

  json phases = json::array();
  const auto async_count = rng.below(3);
  for (std::uint64_t i = 0; i < async_count; ++i) {
    const Ticks start = rng.between(0, horizon * 3 / 4);
    const Ticks len = rng.between(1000, 12000);
    phases.push_back({{"start", start}, {"end", std::min(horizon, start + len)}, {"mode", "async"}});
  }
  // Overlapping phases resolve to the first listed one; keep them disjoint.
  std::sort(phases.begin(), phases.end(), [](const json& a, const json& b) { return a["start"] < b["start"]; });
  json disjoint = json::array();
  for (auto& p : phases) {
    if (!disjoint.empty() && p["start"].get<Ticks>() < disjoint.back()["end"].get<Ticks>()) continue;
    if (p["end"].get<Ticks>() > p["start"].get<Ticks>()) disjoint.push_back(p);
  }
  doc["phases"] = disjoint;

  json partitions = json::array();
  if (rng.chance(40)) {
    const Ticks start = rng.between(0, horizon / 2);
    const Ticks end = std::min(horizon, start + rng.between(2000, 15000));
    json a = json::array();
    json b = json::array();
    for (auto id : order) (rng.chance(50) ? a : b).push_back(id);
    partitions.push_back({{"start", start}, {"end", end}, {"groups", {a, b}}});
  }
  doc["partitions"] = partitions;

  const std::uint32_t mint_count = 2 * n;
  json mints = json::array();
  for (std::uint32_t i = 0; i < mint_count; ++i) mints.push_back({{"owner", "acct" + std::to_string(i)}, {"amount", 100}});
  doc["mints"] = mints;

  json txs = json::array();
  std::vector<std::string> labels;
  const auto tx_count = rng.between(2, 10);
  for (std::int64_t k = 0; k < tx_count; ++k) {
    const auto mint = rng.below(mint_count);
    const auto label = "t" + std::to_string(k);
    txs.push_back({{"label", label},
                   {"at", rng.between(0, horizon * 2 / 3)},
                   {"to", rng.below(n)},
                   {"inputs", {{{"mint", mint}}}},
                   {"outputs", {{{"owner", "dst" + std::to_string(k)}, {"amount", 100}}}},
                   {"nonce", k}});
    labels.push_back(label);
  }
  // Double spends: the same mint paid to two owners, handed to different nodes.
  const auto doubles = rng.below(3);
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::uint64_t d = 0; d < doubles; ++d) {
    const auto mint = rng.below(mint_count);
    const Ticks at = rng.between(0, horizon / 2);
    std::string la = "d" + std::to_string(d) + "a";
    std::string lb = "d" + std::to_string(d) + "b";
    txs.push_back({{"label", la}, {"at", at}, {"to", rng.below(n)}, {"inputs", {{{"mint", mint}}}},
                   {"outputs", {{{"owner", "x" + std::to_string(d)}, {"amount", 100}}}}, {"nonce", 1000 + d}});
    txs.push_back({{"label", lb}, {"at", at + rng.between(0, 2000)}, {"to", rng.below(n)}, {"inputs", {{{"mint", mint}}}},
                   {"outputs", {{{"owner", "y" + std::to_string(d)}, {"amount", 100}}}}, {"nonce", 2000 + d}});
    pairs.emplace_back(la, lb);
  }
  doc["txs"] = txs;

  static const char* kStrategies[] = {"equivocate_blocks", "withhold_from", "stale_permit", "spam_timeouts",
                                      "crash_at",          "silent",        "custom"};
  json byzantine = json::array();
  for (auto id : byz) {
    json b = {{"node", id}};
    const std::string kind = kStrategies[rng.below(rng.chance(30) ? 7 : 4)];
    b["strategy"] = kind;
    if (kind == "equivocate_blocks") {
      b["variants"] = rng.between(2, 3);
      b["permit_variant"] = rng.below(2);
      if (!pairs.empty() && rng.chance(50)) {
        const auto& p = pairs[rng.below(pairs.size())];
        b["variant_txs"] = {{p.first}, {p.second}};
        b["variants"] = 2;
      }
    } else if (kind == "withhold_from") {
      json targets = json::array();
      for (std::uint32_t i = 0; i < n; ++i) {
        if (i != id && rng.chance(50)) targets.push_back(i);
      }
      b["targets"] = targets;
    } else if (kind == "stale_permit") {
      b["lag"] = rng.between(1, 4);
    } else if (kind == "spam_timeouts") {
      b["ahead"] = rng.between(0, 3);
    } else if (kind == "crash_at") {
      b["round"] = rng.between(0, 12);
    } else if (kind == "custom") {
      json script = json::array();
      static const char* kOps[] = {"mute", "unmute", "timeout", "permit_genesis"};
      for (int k = 0; k < 4; ++k) script.push_back({{"round", rng.between(0, 15)}, {"action", kOps[rng.below(4)]}});
      b["script"] = script;
    }
    byzantine.push_back(b);
  }
  doc["byzantine"] = byzantine;
  return doc.dump();
}

FuzzRun fuzz_one(std::uint64_t seed, const FuzzConfig& config) {
  FuzzRun out;
  out.seed = seed;
  out.scenario = random_scenario(seed, config);
  try {
    const auto scenario = parse_scenario(out.scenario);
    auto run = run_scenario(scenario, seed);
    out.violations = std::move(run.violations);
    out.violation_context = std::move(run.violation_context);
    out.trace_digest = run.trace_digest;
    out.events = run.events;
    out.blocks = run.oracle->dag().size() - 1;
    out.committed_txs = run.oracle->committed_txs().size();
    out.frozen_refs = run.oracle->ledger().frozen.size();
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

FuzzSummary run_fuzz(const FuzzConfig& config) {
  FuzzSummary summary;
  summary.runs.resize(config.runs);
  std::atomic<std::uint64_t> next{0};
  auto worker = [&]() {
    for (auto i = next++; i < config.runs; i = next++) summary.runs[i] = fuzz_one(config.base_seed + i, config);
  };
  const unsigned jobs = std::max(1u, config.jobs);
  std::vector<std::thread> threads;
  for (unsigned j = 1; j < jobs; ++j) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  for (const auto& r : summary.runs) {
    if (!r.violations.empty() || !r.error.empty()) ++summary.failed_runs;
  }
  return summary;
}

}  // namespace permitbft
