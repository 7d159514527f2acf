#include "permitbft/adversary.hpp"

#include <algorithm>

namespace permitbft {

ByzantineNode::ByzantineNode(NodeConfig config, Block genesis, std::shared_ptr<const Signer> signer,
                             AdversaryStrategy strategy)
    : shadow_(std::move(config), std::move(genesis), signer), signer_(std::move(signer)), strategy_(std::move(strategy)) {
  if (strategy_.kind == StrategyKind::kEquivocateBlocks) {
    shadow_.set_block_hook([this](const Block& b) { return make_variants(b); });
  }
}

std::vector<NodeAction> ByzantineNode::start(const GlobalView& view) {
  if (strategy_.kind == StrategyKind::kSilent) return {};
  return rewrite(shadow_.start(), view);
}

std::vector<NodeAction> ByzantineNode::handle(const NodeEvent& event, const GlobalView& view) {
  if (strategy_.kind == StrategyKind::kSilent || crashed_) return {};
  return rewrite(shadow_.handle(event), view);
}

std::vector<NodeId> ByzantineNode::others() const {
  std::vector<NodeId> out;
  for (std::uint32_t i = 0; i < shadow_.config().committee.n; ++i) {
    if (i != id().index) out.push_back(NodeId{i});
  }
  return out;
}

Block ByzantineNode::make_variants(const Block& block) {
  const auto k = std::max<std::uint32_t>(strategy_.variants, 1);
  std::vector<Block> vs;
  for (std::uint32_t i = 0; i < k; ++i) {
    std::vector<Transaction> txs;
    if (i < strategy_.variant_txs.size()) {
      txs = strategy_.variant_txs[i];
    } else {
      txs.assign(block.transactions().begin(), block.transactions().end());
      // Zero-value mint so variants with equal payloads still differ.
      txs.push_back(Transaction::mint("equivocation-" + id().str(), 0, block.round().value * k + i));
    }
    vs.push_back(Block::create(block.proof(), std::move(txs), *signer_));
  }
  Block adopted = vs[std::min(strategy_.permit_variant, k - 1)];
  variants_.emplace(adopted.id(), std::move(vs));
  return adopted;
}

void ByzantineNode::emit_send(Send send, std::vector<NodeAction>& out) const {
  if (muted_) return;
  if (strategy_.kind == StrategyKind::kWithholdFrom) {
    auto withheld = [this](NodeId to) {
      return std::find(strategy_.targets.begin(), strategy_.targets.end(), to) != strategy_.targets.end();
    };
    if (!send.to) {
      for (auto to : others()) {
        if (!withheld(to)) out.push_back(Send{to, send.msg});
      }
      return;
    }
    if (withheld(*send.to)) return;
  }
  out.push_back(std::move(send));
}

void ByzantineNode::on_round(Round r, const GlobalView& view, std::vector<NodeAction>& out) {
  if (strategy_.kind == StrategyKind::kSpamTimeouts) {
    const Round from = std::max(r, view.max_honest_round);
    for (std::uint64_t x = from.value; x <= from.value + strategy_.ahead; ++x) {
      if (spammed_.insert(Round{x}).second) emit_send(Send{std::nullopt, TimeoutMsg::issue(Round{x}, *signer_)}, out);
    }
  }
  if (strategy_.kind == StrategyKind::kCustom) {
    for (const auto& step : strategy_.script) {
      if (step.round != r) continue;
      switch (step.op) {
        case ScriptOp::kMute:
          muted_ = true;
          break;
        case ScriptOp::kUnmute:
          muted_ = false;
          break;
        case ScriptOp::kTimeout:
          emit_send(Send{std::nullopt, TimeoutMsg::issue(r, *signer_)}, out);
          break;
        case ScriptOp::kPermitGenesis:
          permit_genesis_.insert(r);
          break;
      }
    }
  }
}

std::vector<NodeAction> ByzantineNode::rewrite(std::vector<NodeAction> actions, const GlobalView& view) {
  std::vector<NodeAction> out;
  for (auto& action : actions) {
    if (crashed_) break;
    if (auto* entered = std::get_if<RoundEntered>(&action)) {
      if (strategy_.kind == StrategyKind::kCrashAt && entered->round >= strategy_.crash_round) {
        crashed_ = true;
        break;
      }
      out.push_back(action);
      on_round(entered->round, view, out);
      continue;
    }
    if (auto* issued = std::get_if<PermitIssued>(&action)) {
      history_[issued->permit.round] = issued->permit.position;
      continue;
    }
    if (std::holds_alternative<ArmTimer>(action)) {
      out.push_back(action);
      continue;
    }
    auto* send = std::get_if<Send>(&action);
    if (!send) continue;

    if (auto* permit = std::get_if<Permit>(&send->msg); permit && permit->issuer() == id()) {
      const Round r = permit->round;
      Position pos = permit->position;
      if (permit_genesis_.count(r)) {
        pos = Position::of(shadow_.dag().genesis().id());
      } else if (strategy_.kind == StrategyKind::kStalePermit) {
        const Round old{r.value >= strategy_.lag ? r.value - strategy_.lag : 0};
        auto it = history_.lower_bound(old);
        if (it != history_.end()) pos = it->second;
      }
      if (pos != permit->position) send->msg = Permit::issue(r, std::move(pos), *signer_);
    }
    if (auto* block = std::get_if<Block>(&send->msg); block && !send->to) {
      auto it = variants_.find(block->id());
      if (it != variants_.end()) {
        const auto& vs = it->second;
        const auto rest = others();
        for (std::size_t i = 0; i < vs.size(); ++i) {
          std::vector<NodeId> group;
          if (!strategy_.groups.empty()) {
            if (i < strategy_.groups.size()) group = strategy_.groups[i];
          } else {
            const auto lo = rest.size() * i / vs.size();
            const auto hi = rest.size() * (i + 1) / vs.size();
            group.assign(rest.begin() + static_cast<std::ptrdiff_t>(lo), rest.begin() + static_cast<std::ptrdiff_t>(hi));
          }
          for (auto to : group) {
            if (to != id()) emit_send(Send{to, vs[i]}, out);
          }
        }
        continue;
      }
    }
    emit_send(std::move(*send), out);
  }
  return out;
}

}  // namespace permitbft
