#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "permitbft/node.hpp"
#include "permitbft/oracle.hpp"
#include "permitbft/scenario.hpp"

namespace permitbft {

/// A byzantine node emitted a signature attributed to an honest node that
/// does not verify. Signals a harness bug, never a protocol outcome.
class ForgeryAttempt : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct MessageRecord {
  Ticks sent;
  NodeId from;
  NodeId to;
  std::string_view kind;
  std::optional<Round> round;
};

struct RoundEntry {
  Ticks at;
  NodeId node;
  Round round;
  RoundExit via;
};

/// A block or proposal as first sent by its creator.
struct Creation {
  Ticks at;
  NodeId node;
  Round round;
  bool is_block;
  std::optional<BlockId> block;
};

struct TxRecord {
  std::string label;
  TxId id;
  NodeId to;
  bool honest_target;
  Ticks injected;
  std::optional<Ticks> committed;  // first instant the global dag commits it
};

struct RunOptions {
  bool keep_trace = false;
  std::optional<std::uint64_t> event_limit;
  bool stop_on_violation = true;
};

struct RunResult {
  std::uint64_t seed = 0;
  Digest trace_digest;
  std::vector<std::string> trace;  // kept only on request
  std::uint64_t events = 0;
  Ticks end_time = 0;
  bool hit_event_limit = false;

  std::vector<Violation> violations;
  std::optional<Ticks> violation_time;
  /// The run halts on the first violating event, so `events` is then the
  /// shortest violating prefix; these are its last trace lines.
  std::vector<std::string> violation_context;

  std::vector<MessageRecord> messages;
  std::vector<RoundEntry> rounds;  // honest nodes only
  std::vector<Creation> creations;
  std::vector<TxRecord> txs;
  std::map<NodeId, std::set<BlockId>> honest_blocks;  // final dag contents
  std::map<NodeId, Round> final_rounds;
  std::shared_ptr<const SafetyOracle> oracle;  // final global state
};

/// Runs one scenario under the given seed to the horizon. Deterministic in
/// (scenario, seed, options.event_limit).
RunResult run_scenario(const Scenario& scenario, std::uint64_t seed, const RunOptions& options = {});

}  // namespace permitbft
