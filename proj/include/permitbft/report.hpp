#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "permitbft/liveness.hpp"
#include "permitbft/metrics.hpp"

namespace permitbft {

enum class ReportFormat { kJson, kCsv };

/// One row of a report.
struct RunRecord {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string trace_digest;
  std::uint64_t events = 0;
  std::vector<std::string> violations;
  Summary latency;
  std::size_t normal_rounds = 0;
  Summary normal_messages;
  std::size_t failure_rounds = 0;
  Summary failure_messages;
  std::size_t blocks = 0;
  std::size_t committed_txs = 0;
  std::size_t frozen_refs = 0;
  std::optional<bool> liveness_ok;
  std::optional<std::uint64_t> rounds_to_commit;
};

RunRecord make_record(const Scenario& scenario, const RunResult& run, const RunMetrics& metrics,
                      const std::optional<LivenessReport>& liveness);

std::string render_report(const std::vector<RunRecord>& records, ReportFormat format);
/// `seed latency_mean latency_max` per line, for plotting latency against seed.
std::string render_plot(const std::vector<RunRecord>& records);

}  // namespace permitbft
