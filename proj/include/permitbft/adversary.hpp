#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "permitbft/node.hpp"
#include "permitbft/scenario.hpp"

namespace permitbft {

/// What the adversary may read beyond its own inboxes.
struct GlobalView {
  Ticks now = 0;
  Round max_honest_round;
};

/// A byzantine identity: an honest shadow node whose outgoing actions are
/// rewritten by a strategy. Only the node's own key is available, so every
/// fresh signature it produces is its own.
class ByzantineNode {
 public:
  ByzantineNode(NodeConfig config, Block genesis, std::shared_ptr<const Signer> signer, AdversaryStrategy strategy);

  std::vector<NodeAction> start(const GlobalView& view);
  std::vector<NodeAction> handle(const NodeEvent& event, const GlobalView& view);

  NodeId id() const { return shadow_.id(); }
  const Node& shadow() const { return shadow_; }
  const AdversaryStrategy& strategy() const { return strategy_; }

 private:
  std::vector<NodeAction> rewrite(std::vector<NodeAction> actions, const GlobalView& view);
  void emit_send(Send send, std::vector<NodeAction>& out) const;
  std::vector<NodeId> others() const;
  Block make_variants(const Block& block);
  void on_round(Round r, const GlobalView& view, std::vector<NodeAction>& out);

  Node shadow_;
  std::shared_ptr<const Signer> signer_;
  AdversaryStrategy strategy_;
  bool crashed_ = false;
  bool muted_ = false;

  std::map<Round, Position> history_;           // permit position per round
  std::map<BlockId, std::vector<Block>> variants_;  // adopted variant -> all variants
  std::set<Round> spammed_;
  std::set<Round> permit_genesis_;
};

}  // namespace permitbft
