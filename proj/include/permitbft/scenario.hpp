#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "permitbft/types.hpp"

namespace permitbft {

struct TimerConfig {
  Ticks delta = 1000;
  Ticks creator_timeout = 2500;
  Ticks round_timeout = 5500;

  /// 2Δ < creator timeout < 3Δ and 5Δ < round timeout.
  bool liveness_bounds_hold() const {
    return 2 * delta < creator_timeout && creator_timeout < 3 * delta && 5 * delta < round_timeout;
  }
};

enum class DelayMode { kUniform, kFixed };

/// Time not covered by any phase is synchronous.
struct SynchronyPhase {
  Ticks start = 0;
  Ticks end = 0;
  bool synchronous = true;
};

/// Messages between different groups sent in [start, end) arrive at or after
/// `end`. Nodes not listed form one extra group.
struct Partition {
  Ticks start = 0;
  Ticks end = 0;
  std::vector<std::vector<NodeId>> groups;
};

enum class StrategyKind { kSilent, kCrashAt, kEquivocateBlocks, kWithholdFrom, kStalePermit, kSpamTimeouts, kCustom };

std::string_view to_string(StrategyKind kind);

enum class ScriptOp { kMute, kUnmute, kTimeout, kPermitGenesis };

struct ScriptStep {
  Round round;
  ScriptOp op = ScriptOp::kMute;
};

struct AdversaryStrategy {
  StrategyKind kind = StrategyKind::kSilent;
  Round crash_round;                                // kCrashAt
  std::uint32_t variants = 2;                       // kEquivocateBlocks
  std::vector<std::vector<NodeId>> groups;          // kEquivocateBlocks, recipients per variant
  std::uint32_t permit_variant = 0;                 // kEquivocateBlocks, variant this node follows
  std::vector<std::vector<Transaction>> variant_txs;  // kEquivocateBlocks, per-variant payloads
  std::vector<NodeId> targets;                      // kWithholdFrom
  std::uint32_t lag = 1;                            // kStalePermit
  std::uint32_t ahead = 2;                          // kSpamTimeouts
  std::vector<ScriptStep> script;                   // kCustom
};

struct TxInjection {
  Ticks at;
  NodeId to;
  std::string label;
  Transaction tx;
};

struct Checks {
  bool safety = true;
  bool liveness = false;
  bool latency = false;
  bool msg_complexity = false;
};

struct Scenario {
  std::string name;
  std::uint32_t n = 4;
  std::uint32_t f = 1;
  TimerConfig timers;
  DelayMode delay_mode = DelayMode::kUniform;
  std::vector<SynchronyPhase> phases;
  std::vector<Partition> partitions;
  std::map<NodeId, AdversaryStrategy> byzantine;
  std::vector<Transaction> mints;
  std::vector<TxInjection> txs;
  Ticks horizon = 60000;
  std::uint64_t seed = 0;
  Checks checks;
  Digest digest;  // of the canonical source document

  bool is_honest(NodeId id) const { return byzantine.count(id) == 0; }
  Block genesis() const { return Block::genesis(n, mints); }
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConstraintError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses and validates a scenario document. Throws ParseError on malformed
/// input (with line or field) and ConstraintError on inconsistent parameters.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

/// Structural checks shared by files and generated scenarios.
void validate_scenario(const Scenario& scenario);

/// Seed precedence: explicit flag, then PERMITBFT_SEED, then the file.
std::uint64_t resolve_seed(const Scenario& scenario, std::optional<std::uint64_t> flag);

}  // namespace permitbft
