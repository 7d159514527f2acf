#include "permitbft/oracle.hpp"

#include <algorithm>

namespace permitbft {

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kCommittedNotPromised:
      return "committed_not_promised";
    case ViolationKind::kIndependentlyPromised:
      return "independently_promised";
    case ViolationKind::kIndependentlyCommitted:
      return "independently_committed";
    case ViolationKind::kUnsafePermits:
      return "unsafe_permits";
    case ViolationKind::kConflictingCommitted:
      return "conflicting_committed_txs";
    case ViolationKind::kRevokedCommit:
      return "revoked_commit";
    case ViolationKind::kReorderedLedger:
      return "reordered_ledger";
    case ViolationKind::kDoubleVoice:
      return "double_voice";
    case ViolationKind::kRoundRegression:
      return "round_regression";
  }
  return "unknown";
}

SafetyOracle::SafetyOracle(Committee committee, Block genesis, std::set<NodeId> honest)
    : committee_(committee), honest_(std::move(honest)), dag_(std::move(genesis), committee) {
  const auto faulty = committee_.n - static_cast<std::uint32_t>(honest_.size());
  promise_threshold_ = committee_.quorum() > faulty ? committee_.quorum() - faulty : 1;
}

void SafetyOracle::observe_block(const Block& block) {
  if (dag_.contains(block.id()) || pending_.contains(block.id())) return;
  auto result = dag_.insert(block);
  if (result.status == InsertStatus::kPending) {
    pending_.add(block, result.missing);
    return;
  }
  if (result.status != InsertStatus::kInserted) return;
  ++version_;
  std::vector<BlockId> queue{block.id()};
  while (!queue.empty()) {
    auto id = queue.back();
    queue.pop_back();
    for (auto& b : pending_.release(id, dag_)) {
      if (dag_.insert(b).status == InsertStatus::kInserted) queue.push_back(b.id());
    }
  }
}

bool SafetyOracle::respects_all_promised(Round round, const Position& position) const {
  for (const auto& id : position.blocks()) {
    if (!dag_.contains(id)) return true;  // not judgeable yet
  }
  for (const auto& [b, since] : promised_round_) {
    if (since <= round && !dag_.respects(position, b)) return false;
  }
  return true;
}

void SafetyOracle::observe_permit(NodeId node, const Permit& permit) {
  if (!honest_.count(node)) return;
  auto& slot = honest_permits_[permit.round];
  if (!slot.emplace(node, permit.position).second) {
    queued_.push_back({ViolationKind::kDoubleVoice, node.str() + " issued two permits in round " +
                                                        std::to_string(permit.round.value)});
    return;
  }
  if (!respects_all_promised(permit.round, permit.position)) {
    auto count = ++unsafe_[permit.round];
    if (count > committee_.f) {
      queued_.push_back({ViolationKind::kUnsafePermits, std::to_string(count) + " unsafe honest permits in round " +
                                                            std::to_string(permit.round.value)});
    }
  }
  std::uint32_t support = 0;
  for (const auto& [issuer, pos] : slot) support += pos == permit.position ? 1 : 0;
  if (support == promise_threshold_) promise(permit.round, permit.position);
}

void SafetyOracle::force_promise(Round round, const Position& position) { promise(round, position); }

void SafetyOracle::promise(Round round, const Position& position) {
  for (const auto& b : position.blocks()) {
    auto [it, fresh] = promised_round_.emplace(b, round);
    if (!fresh) it->second = std::min(it->second, round);
  }
  if (!promised_positions_.insert(position).second) return;
  promised_.insert(position.blocks().begin(), position.blocks().end());
  ++version_;
}

void SafetyOracle::observe_timeout(NodeId node, Round round) {
  if (!honest_.count(node)) return;
  if (!timeouts_.emplace(node, round).second) {
    queued_.push_back({ViolationKind::kDoubleVoice, node.str() + " sent two timeouts for round " +
                                                        std::to_string(round.value)});
  }
}

void SafetyOracle::observe_round(NodeId node, Round round) {
  if (!honest_.count(node)) return;
  auto [it, fresh] = last_round_.emplace(node, round);
  if (fresh) return;
  if (round <= it->second) {
    queued_.push_back({ViolationKind::kRoundRegression, node.str() + " entered round " + std::to_string(round.value) +
                                                            " after " + std::to_string(it->second.value)});
  }
  it->second = std::max(it->second, round);
}

void SafetyOracle::check_pairs(const std::vector<Position>& positions, ViolationKind kind,
                               std::vector<Violation>& out) const {
  const auto n = dag_.size();
  std::vector<BlockSet> sets;
  std::vector<const Position*> judged;
  for (const auto& p : positions) {
    if (!std::all_of(p.blocks().begin(), p.blocks().end(), [this](const BlockId& id) { return dag_.contains(id); })) {
      continue;
    }
    sets.push_back(dag_.respected_set(p));
    judged.push_back(&p);
  }
  std::vector<BlockSet> block_resp;  // what each block's position respects
  block_resp.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& b = dag_.block_at(i);
    if (b.is_genesis()) {
      BlockSet g(n);
      g.set(0);
      block_resp.push_back(std::move(g));
    } else {
      block_resp.push_back(dag_.respected_set(b.position()));
    }
  }
  for (std::size_t x = 0; x < sets.size(); ++x) {
    for (std::size_t y = x + 1; y < sets.size(); ++y) {
      const BlockSet only_x = sets[x] - sets[y];
      const BlockSet only_y = sets[y] - sets[x];
      if (only_x.none() || only_y.none()) continue;
      for (auto a = only_x.find_first(); a != BlockSet::npos; a = only_x.find_next(a)) {
        for (auto b = only_y.find_first(); b != BlockSet::npos; b = only_y.find_next(b)) {
          if (!block_resp[a].test(b) && !block_resp[b].test(a)) {
            out.push_back({kind, dag_.block_at(a).id().str() + " vs " + dag_.block_at(b).id().str() + " via " +
                                     judged[x]->str() + " and " + judged[y]->str()});
            return;
          }
        }
      }
    }
  }
}

std::vector<Violation> SafetyOracle::check() {
  std::vector<Violation> out = std::move(queued_);
  queued_.clear();
  if (version_ == checked_version_) return out;
  checked_version_ = version_;

  for (std::size_t i = 0; i < dag_.size(); ++i) {
    if (dag_.committed_at(i) && !promised_.count(dag_.block_at(i).id())) {
      out.push_back({ViolationKind::kCommittedNotPromised, dag_.block_at(i).id().str()});
    }
  }

  check_pairs(std::vector<Position>(promised_positions_.begin(), promised_positions_.end()),
              ViolationKind::kIndependentlyPromised, out);
  std::set<Position> created;
  for (std::size_t i = 1; i < dag_.size(); ++i) created.insert(dag_.block_at(i).position());
  check_pairs(std::vector<Position>(created.begin(), created.end()), ViolationKind::kIndependentlyCommitted, out);

  auto next = linearize(dag_);
  std::vector<const Transaction*> committed;
  for (const auto& id : next.committed) committed.push_back(&next.txs.at(id));
  std::map<OutputRef, TxId> spender;
  for (const auto* tx : committed) {
    for (const auto& in : tx->inputs()) {
      auto [it, fresh] = spender.emplace(in, tx->id());
      if (!fresh && it->second != tx->id()) {
        out.push_back({ViolationKind::kConflictingCommitted, it->second.str() + " and " + tx->id().str() + " spend " +
                                                                 in.str()});
      }
    }
  }
  if (!std::includes(next.committed.begin(), next.committed.end(), ledger_.committed.begin(),
                     ledger_.committed.end())) {
    out.push_back({ViolationKind::kRevokedCommit, "committed transaction set shrank"});
  }
  if (next.finalized_order.size() < ledger_.finalized_order.size() ||
      !std::equal(ledger_.finalized_order.begin(), ledger_.finalized_order.end(), next.finalized_order.begin())) {
    out.push_back({ViolationKind::kReorderedLedger, "finalized prefix changed"});
  }
  ledger_ = std::move(next);
  return out;
}

}  // namespace permitbft
