#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "permitbft/dag.hpp"
#include "permitbft/ledger.hpp"

namespace permitbft {

enum class ViolationKind {
  kCommittedNotPromised,
  kIndependentlyPromised,
  kIndependentlyCommitted,
  kUnsafePermits,
  kConflictingCommitted,
  kRevokedCommit,
  kReorderedLedger,
  kDoubleVoice,
  kRoundRegression,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string detail;
};

/// Omniscient safety checker. Sees every created block and every honest
/// permit, timeout and round change, and holds the union dag.
class SafetyOracle {
 public:
  SafetyOracle(Committee committee, Block genesis, std::set<NodeId> honest);

  /// A block someone sent. Blocks with unknown parents wait for them.
  void observe_block(const Block& block);
  /// Checked at emission against the blocks promised so far in rounds up to
  /// the permit's own: in any round at most f honest permits may fail to
  /// respect them.
  void observe_permit(NodeId node, const Permit& permit);
  void observe_timeout(NodeId node, Round round);
  void observe_round(NodeId node, Round round);

  /// Re-evaluates the graph-level properties if anything changed since the
  /// last call. Returns the violations found by this call and by observe_*.
  std::vector<Violation> check();

  const BlockDag& dag() const { return dag_; }
  const std::set<BlockId>& promised() const { return promised_; }
  const std::set<TxId>& committed_txs() const { return ledger_.committed; }
  const LedgerView& ledger() const { return ledger_; }
  /// Rounds whose honest permits included some unsafe one, with the count.
  const std::map<Round, std::uint32_t>& unsafe_permits() const { return unsafe_; }
  /// Bumped whenever the dag or the promised set grows.
  std::uint64_t version() const { return version_; }

  /// Honest permits that make a position promised: a quorum minus the faulty
  /// nodes, so f+1 when exactly f nodes are faulty.
  std::uint32_t promise_threshold() const { return promise_threshold_; }

  /// Adds a position as if enough honest nodes had permitted it in `round`.
  /// Test hook for exercising the checks on fabricated states.
  void force_promise(Round round, const Position& position);

 private:
  void promise(Round round, const Position& position);
  void check_pairs(const std::vector<Position>& positions, ViolationKind kind, std::vector<Violation>& out) const;
  bool respects_all_promised(Round round, const Position& position) const;

  Committee committee_;
  std::set<NodeId> honest_;
  BlockDag dag_;
  PendingPool pending_;

  std::map<Round, std::map<NodeId, Position>> honest_permits_;
  std::set<Position> promised_positions_;
  std::set<BlockId> promised_;
  std::map<BlockId, Round> promised_round_;  // earliest round each block was promised in
  std::uint32_t promise_threshold_ = 0;
  std::map<Round, std::uint32_t> unsafe_;
  std::map<NodeId, Round> last_round_;
  std::set<std::pair<NodeId, Round>> timeouts_;

  LedgerView ledger_;
  std::vector<Violation> queued_;
  std::uint64_t version_ = 0;
  std::uint64_t checked_version_ = 0;
};

}  // namespace permitbft
