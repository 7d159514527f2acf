#include "permitbft/report.hpp"

#include <sstream>

#include <json.hpp>

namespace permitbft {

using nlohmann::json;

RunRecord make_record(const Scenario& s, const RunResult& run, const RunMetrics& m,
                      const std::optional<LivenessReport>& liveness) {
  RunRecord r;
  r.scenario = s.name.empty() ? s.digest.short_hex() : s.name;
  r.seed = run.seed;
  r.trace_digest = run.trace_digest.hex();
  r.events = run.events;
  for (const auto& v : run.violations) r.violations.push_back(std::string(to_string(v.kind)) + ": " + v.detail);
  r.latency = summarize(m.latencies);
  std::vector<double> normal;
  std::vector<double> failure;
  for (const auto& t : m.rounds) {
    if (t.block_round) normal.push_back(static_cast<double>(t.total));
    if (t.failure_round) failure.push_back(static_cast<double>(t.total));
  }
  r.normal_rounds = normal.size();
  r.normal_messages = summarize(normal);
  r.failure_rounds = failure.size();
  r.failure_messages = summarize(failure);
  r.blocks = m.blocks;
  r.committed_txs = m.committed_txs;
  r.frozen_refs = run.oracle ? run.oracle->ledger().frozen.size() : 0;
  if (liveness) {
    r.liveness_ok = liveness->ok;
    r.rounds_to_commit = liveness->rounds_to_commit;
  }
  return r;
}

namespace {

json summary_json(const Summary& s) { return {{"count", s.count}, {"min", s.min}, {"max", s.max}, {"mean", s.mean}}; }

json record_json(const RunRecord& r) {
  json j = {
      {"scenario", r.scenario},
      {"seed", r.seed},
      {"trace_digest", r.trace_digest},
      {"events", r.events},
      {"violations", r.violations},
      {"latency_delta", summary_json(r.latency)},
      {"normal_round_messages", summary_json(r.normal_messages)},
      {"failure_round_messages", summary_json(r.failure_messages)},
      {"blocks", r.blocks},
      {"committed_txs", r.committed_txs},
      {"frozen_refs", r.frozen_refs},
  };
  j["liveness_ok"] = r.liveness_ok ? json(*r.liveness_ok) : json(nullptr);
  j["rounds_to_commit"] = r.rounds_to_commit ? json(*r.rounds_to_commit) : json(nullptr);
  return j;
}

}  // namespace

std::string render_report(const std::vector<RunRecord>& records, ReportFormat format) {
  if (format == ReportFormat::kJson) {
    json arr = json::array();
    for (const auto& r : records) arr.push_back(record_json(r));
    return arr.dump(2) + "\n";
  }
  std::ostringstream out;
  out << "scenario,seed,trace_digest,events,violations,latency_count,latency_mean,latency_max,"
         "normal_rounds,normal_msgs_max,failure_rounds,failure_msgs_max,blocks,committed_txs,frozen_refs,"
         "liveness_ok,rounds_to_commit\n";
  for (const auto& r : records) {
    out << r.scenario << ',' << r.seed << ',' << r.trace_digest << ',' << r.events << ',' << r.violations.size() << ','
        << r.latency.count << ',' << r.latency.mean << ',' << r.latency.max << ',' << r.normal_rounds << ','
        << r.normal_messages.max << ',' << r.failure_rounds << ',' << r.failure_messages.max << ',' << r.blocks << ','
        << r.committed_txs << ',' << r.frozen_refs << ','
        << (r.liveness_ok ? (*r.liveness_ok ? "true" : "false") : "") << ','
        << (r.rounds_to_commit ? std::to_string(*r.rounds_to_commit) : "") << '\n';
  }
  return out.str();
}

std::string render_plot(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  out << "# seed latency_mean latency_max\n";
  for (const auto& r : records) {
    if (r.latency.count == 0) continue;
    out << r.seed << ' ' << r.latency.mean << ' ' << r.latency.max << '\n';
  }
  return out.str();
}

}  // namespace permitbft
