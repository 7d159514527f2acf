#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "permitbft/simulator.hpp"

namespace permitbft {

struct FuzzConfig {
  std::uint64_t runs = 1000;
  std::uint64_t base_seed = 1;
  unsigned jobs = 1;
  std::vector<std::uint32_t> sizes{4, 7};
  Ticks horizon = 40000;
};

struct FuzzRun {
  std::uint64_t seed = 0;
  std::string scenario;  // JSON text, replayable with `run`
  std::vector<Violation> violations;
  std::vector<std::string> violation_context;
  std::string error;     // non-empty if the run threw
  Digest trace_digest;
  std::uint64_t events = 0;
  std::size_t blocks = 0;
  std::size_t committed_txs = 0;
  std::size_t frozen_refs = 0;
};

struct FuzzSummary {
  std::vector<FuzzRun> runs;  // in seed order
  std::uint64_t failed_runs = 0;
};

/// A random adversarial scenario drawn from `seed`: byzantine strategies,
/// partitions, asynchronous phases and double-spend attempts.
std::string random_scenario(std::uint64_t seed, const FuzzConfig& config);

FuzzRun fuzz_one(std::uint64_t seed, const FuzzConfig& config);

/// Runs seeds base_seed .. base_seed + runs - 1 on `jobs` threads.
FuzzSummary run_fuzz(const FuzzConfig& config);

}  // namespace permitbft
