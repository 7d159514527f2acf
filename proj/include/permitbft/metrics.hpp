#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "permitbft/simulator.hpp"

namespace permitbft {

struct RoundTraffic {
  Round round;
  std::uint64_t total = 0;
  std::map<std::string, std::uint64_t> by_kind;
  bool block_round = false;    // a block was created for the round
  bool failure_round = false;  // neither block nor proposal
};

struct RunMetrics {
  /// Commit latency in delay units for txs handed to honest nodes.
  std::vector<double> latencies;
  std::vector<RoundTraffic> rounds;
  std::uint64_t fetch_messages = 0;
  std::uint64_t total_messages = 0;
  std::size_t violations = 0;
  std::size_t committed_txs = 0;
  std::size_t blocks = 0;
};

/// Rounds that were still open at the end of the run are left out.
RunMetrics collect_metrics(const Scenario& scenario, const RunResult& run);

struct Summary {
  std::size_t count = 0;
  double min = 0;
  double max = 0;
  double mean = 0;
};

Summary summarize(const std::vector<double>& values);

/// Least-squares fit y = a n^2 + b n + c.
struct QuadraticFit {
  double a = 0;
  double b = 0;
  double c = 0;
  double max_abs_residual = 0;
};

QuadraticFit fit_quadratic(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace permitbft
