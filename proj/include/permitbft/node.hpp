#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "permitbft/dag.hpp"

namespace permitbft {

enum class TimerKind { kCreator, kRound };

struct Deliver {
  Message msg;
  NodeId from;
};
struct TimerFired {
  TimerKind kind;
  Round round;
};
struct InjectTx {
  Transaction tx;
};
using NodeEvent = std::variant<Deliver, TimerFired, InjectTx>;

/// `to` empty means every other node.
struct Send {
  std::optional<NodeId> to;
  Message msg;
};
struct ArmTimer {
  TimerKind kind;
  Round round;
  Ticks after;
};
/// Transactions that became committed in this node's dag.
struct CommitNotice {
  std::vector<TxId> txs;
};
enum class RoundExit { kStart, kBlock, kProposal, kTimeouts };
struct RoundEntered {
  Round round;
  RoundExit via;
};
struct Dropped {
  std::string what;
  std::string reason;
};
/// Every permit the node signs, including the creator's own.
struct PermitIssued {
  Permit permit;
};
using NodeAction = std::variant<Send, ArmTimer, CommitNotice, RoundEntered, Dropped, PermitIssued>;

std::string_view to_string(TimerKind kind);
std::string_view to_string(RoundExit via);

struct NodeConfig {
  NodeId id;
  Committee committee;
  Ticks creator_timeout = 2500;
  Ticks round_timeout = 5500;
};

enum class Phase { kIdle, kCreatorCollecting, kAwaitingResult };

using RoundResult = std::variant<Block, Proposal, TimeoutBundle>;

/// Honest protocol state machine. Deterministic: the same event sequence
/// yields the same actions.
class Node {
 public:
  Node(NodeConfig config, Block genesis, std::shared_ptr<const Signer> signer);

  /// Enters round 0 with the genesis position.
  std::vector<NodeAction> start();
  std::vector<NodeAction> handle(const NodeEvent& event);

  NodeId id() const { return config_.id; }
  const NodeConfig& config() const { return config_; }
  Round round() const { return round_; }
  const Position& current() const { return current_; }
  Phase phase() const { return phase_; }
  const BlockDag& dag() const { return dag_; }
  const std::optional<RoundResult>& last_result() const { return last_result_; }
  const std::set<TxId>& committed() const { return committed_; }
  std::size_t mempool_size() const { return mempool_.size(); }
  const Signer& signer() const { return *signer_; }

  /// Rewrites each block this node creates before it is sent and
  /// self-delivered. Adversary plumbing; honest nodes leave it unset.
  void set_block_hook(std::function<Block(const Block&)> hook) { block_hook_ = std::move(hook); }

 private:
  using Actions = std::vector<NodeAction>;

  bool is_creator(Round r) const { return creator_of(r, config_.committee.n) == config_.id; }
  void enter_round(Round r, RoundExit via, Actions& out);

  void on_permit(const Permit& permit, NodeId from, Actions& out);
  void on_block(const Block& block, NodeId from, Actions& out);
  void on_proposal(const Proposal& proposal, NodeId from, Actions& out);
  void on_timeout(const TimeoutMsg& msg, NodeId from, Actions& out);
  void on_bundle(const TimeoutBundle& bundle, Actions& out);
  void on_fetch(const FetchRequest& req, NodeId from, Actions& out);
  void on_timer(const TimerFired& timer, Actions& out);

  void store_permit(const Permit& permit, Actions& out, std::optional<NodeId> from);
  void try_create_block(Actions& out);
  void propose(Actions& out);
  std::vector<Transaction> select_transactions(const Position& position) const;
  bool position_known(const Position& position) const;
  void request_missing(std::span<const BlockId> ids, NodeId from, Actions& out);
  void after_insert(const BlockId& id, Actions& out);
  void accept_block(const Block& block, Actions& out);
  void check_timeouts(Actions& out);
  void broadcast_and_self(Message msg, Actions& out);
  void refresh_commits(Actions& out);

  NodeConfig config_;
  std::shared_ptr<const Signer> signer_;
  BlockDag dag_;
  PendingPool pending_;
  std::set<std::pair<BlockId, NodeId>> requested_;
  std::vector<std::pair<Proposal, NodeId>> pending_proposals_;

  Round round_;
  Position current_;
  Phase phase_ = Phase::kIdle;
  bool started_ = false;
  std::optional<RoundResult> last_result_;

  std::map<Round, std::map<NodeId, Permit>> permits_;
  std::map<Round, std::map<NodeId, TimeoutMsg>> timeouts_;
  std::set<Round> timeout_sent_;

  std::vector<Transaction> mempool_;
  std::set<TxId> mempool_ids_;
  std::set<TxId> committed_;
  std::function<Block(const Block&)> block_hook_;
};

}  // namespace permitbft
