#include "permitbft/node.hpp"

#include <algorithm>

#include "permitbft/ledger.hpp"

namespace permitbft {

std::string_view to_string(TimerKind kind) { return kind == TimerKind::kCreator ? "creator" : "round"; }

std::string_view to_string(RoundExit via) {
  switch (via) {
    case RoundExit::kStart:
      return "start";
    case RoundExit::kBlock:
      return "block";
    case RoundExit::kProposal:
      return "proposal";
    case RoundExit::kTimeouts:
      return "timeouts";
  }
  return "unknown";
}

Node::Node(NodeConfig config, Block genesis, std::shared_ptr<const Signer> signer)
    : config_(std::move(config)), signer_(std::move(signer)), dag_(genesis, config_.committee) {
  current_ = Position::of(dag_.genesis().id());
}

std::vector<NodeAction> Node::start() {
  Actions out;
  if (started_) return out;
  started_ = true;
  enter_round(Round{0}, RoundExit::kStart, out);
  return out;
}

std::vector<NodeAction> Node::handle(const NodeEvent& event) {
  Actions out;
  if (!started_) return out;
  std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, Deliver>) {
          std::visit(
              [&](const auto& m) {
                using M = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<M, Permit>) {
                  on_permit(m, e.from, out);
                } else if constexpr (std::is_same_v<M, Block>) {
                  on_block(m, e.from, out);
                } else if constexpr (std::is_same_v<M, Proposal>) {
                  on_proposal(m, e.from, out);
                } else if constexpr (std::is_same_v<M, TimeoutMsg>) {
                  on_timeout(m, e.from, out);
                } else if constexpr (std::is_same_v<M, TimeoutBundle>) {
                  on_bundle(m, out);
                } else if constexpr (std::is_same_v<M, FetchRequest>) {
                  on_fetch(m, e.from, out);
                } else {
                  on_block(m.block, e.from, out);
                }
              },
              e.msg);
        } else if constexpr (std::is_same_v<T, TimerFired>) {
          on_timer(e, out);
        } else {
          if (mempool_ids_.insert(e.tx.id()).second) mempool_.push_back(e.tx);
        }
      },
      event);
  return out;
}

void Node::enter_round(Round r, RoundExit via, Actions& out) {
  round_ = r;
  out.push_back(RoundEntered{r, via});
  permits_.erase(permits_.begin(), permits_.lower_bound(r));
  timeouts_.erase(timeouts_.begin(), timeouts_.lower_bound(r));

  auto permit = Permit::issue(r, current_, *signer_);
  out.push_back(PermitIssued{permit});
  out.push_back(ArmTimer{TimerKind::kRound, r, config_.round_timeout});
  if (is_creator(r)) {
    phase_ = Phase::kCreatorCollecting;
    out.push_back(ArmTimer{TimerKind::kCreator, r, config_.creator_timeout});
    store_permit(permit, out, std::nullopt);
  } else {
    phase_ = Phase::kAwaitingResult;
    out.push_back(Send{creator_of(r, config_.committee.n), permit});
  }
}

// ---------------------------------------------------------------------------
// Creator side

void Node::on_permit(const Permit& permit, NodeId from, Actions& out) {
  const auto n = config_.committee.n;
  if (!is_creator(permit.round)) {
    out.push_back(Dropped{"permit", "not_creator"});
    return;
  }
  if (permit.issuer().index >= n || !permit.verify(*config_.committee.verifier)) {
    out.push_back(Dropped{"permit", "bad_signature"});
    return;
  }
  if (permit.round < round_) {
    out.push_back(Dropped{"permit", "old_round"});
    return;
  }
  if (permit.round.value > round_.value + n) {
    out.push_back(Dropped{"permit", "beyond_window"});
    return;
  }
  store_permit(permit, out, from);
}

void Node::store_permit(const Permit& permit, Actions& out, std::optional<NodeId> from) {
  if (permit.position.empty()) {
    out.push_back(Dropped{"permit", "empty_position"});
    return;
  }
  auto& slot = permits_[permit.round];
  if (!slot.emplace(permit.issuer(), permit).second) {
    out.push_back(Dropped{"permit", "duplicate_issuer"});
    return;
  }
  if (from) {
    std::vector<BlockId> missing;
    for (const auto& id : permit.position.blocks()) {
      if (!dag_.contains(id)) missing.push_back(id);
    }
    request_missing(missing, *from, out);
  }
  if (permit.round == round_ && phase_ == Phase::kCreatorCollecting) try_create_block(out);
}

bool Node::position_known(const Position& position) const {
  return std::all_of(position.blocks().begin(), position.blocks().end(),
                     [this](const BlockId& id) { return dag_.contains(id); });
}

void Node::try_create_block(Actions& out) {
  auto it = permits_.find(round_);
  if (it == permits_.end()) return;
  std::map<Position, std::vector<Permit>> by_position;
  for (const auto& [issuer, p] : it->second) {
    if (position_known(p.position)) by_position[p.position].push_back(p);
  }
  const std::vector<Permit>* chosen = nullptr;
  for (const auto& [pos, ps] : by_position) {
    if (ps.size() >= config_.committee.quorum() && (!chosen || ps.size() > chosen->size())) chosen = &ps;
  }
  if (!chosen) return;

  // Map iteration is by issuer, so these are the lowest issuers.
  Proof proof{std::vector<Permit>(chosen->begin(), chosen->begin() + config_.committee.quorum())};
  auto txs = select_transactions(proof.permits.front().position);
  auto block = Block::create(std::move(proof), std::move(txs), *signer_);
  if (block_hook_) block = block_hook_(block);
  phase_ = Phase::kAwaitingResult;
  broadcast_and_self(block, out);
}

void Node::propose(Actions& out) {
  phase_ = Phase::kAwaitingResult;
  auto it = permits_.find(round_);
  if (it == permits_.end()) return;
  std::vector<Permit> usable;
  std::vector<Position> positions;
  for (const auto& [issuer, p] : it->second) {
    if (!position_known(p.position)) continue;
    usable.push_back(p);
    positions.push_back(p.position);
  }
  if (usable.size() < config_.committee.quorum()) return;
  auto position = minimal_position(dag_, positions);
  broadcast_and_self(Proposal::issue(std::move(position), std::move(usable), *signer_), out);
}

std::vector<Transaction> Node::select_transactions(const Position& position) const {
  // Outputs usable by the new block: genesis mints and txs on its ancestry.
  BlockSet ancestry(dag_.size());
  for (const auto& id : position.blocks()) {
    BlockSet anc = dag_.ancestors_at(dag_.index_of(id));
    anc.resize(dag_.size());
    ancestry |= anc;
  }
  std::map<TxId, std::size_t> tx_home;
  std::set<OutputRef> spent;
  for (std::size_t i = 0; i < dag_.size(); ++i) {
    for (const auto& tx : dag_.block_at(i).transactions()) {
      tx_home.emplace(tx.id(), i);
      for (const auto& in : tx.inputs()) spent.insert(in);
    }
  }

  std::vector<Transaction> chosen;
  for (const auto& tx : mempool_) {
    if (tx.is_coinbase() || tx_home.count(tx.id())) continue;
    bool ok = true;
    for (const auto& in : tx.inputs()) {
      auto home = tx_home.find(in.tx);
      if (spent.count(in) || home == tx_home.end() || !ancestry.test(home->second)) {
        ok = false;
        break;
      }
      const auto& outs = dag_.block_at(home->second).transactions();
      auto src = std::find_if(outs.begin(), outs.end(), [&in](const Transaction& t) { return t.id() == in.tx; });
      if (in.index >= src->outputs().size()) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    for (const auto& in : tx.inputs()) spent.insert(in);
    chosen.push_back(tx);
  }
  return chosen;
}

// ---------------------------------------------------------------------------
// Results

void Node::broadcast_and_self(Message msg, Actions& out) {
  out.push_back(Send{std::nullopt, msg});
  if (auto* b = std::get_if<Block>(&msg)) {
    on_block(*b, config_.id, out);
  } else if (auto* p = std::get_if<Proposal>(&msg)) {
    on_proposal(*p, config_.id, out);
  }
}

void Node::request_missing(std::span<const BlockId> ids, NodeId from, Actions& out) {
  if (from == config_.id) return;
  for (const auto& id : ids) {
    if (requested_.emplace(id, from).second) out.push_back(Send{from, FetchRequest{id}});
  }
}

void Node::on_block(const Block& block, NodeId from, Actions& out) {
  if (pending_.contains(block.id())) return;
  auto result = dag_.insert(block);
  switch (result.status) {
    case InsertStatus::kRejected:
      out.push_back(Dropped{"block", std::string(to_string(*result.reason))});
      return;
    case InsertStatus::kPending:
      pending_.add(block, result.missing);
      request_missing(result.missing, from, out);
      return;
    case InsertStatus::kDuplicate:
      accept_block(block, out);
      return;
    case InsertStatus::kInserted:
      after_insert(block.id(), out);
      accept_block(block, out);
      return;
  }
}

void Node::after_insert(const BlockId& id, Actions& out) {
  std::vector<BlockId> queue{id};
  std::vector<Block> released;
  while (!queue.empty()) {
    auto next = queue.back();
    queue.pop_back();
    for (auto& b : pending_.release(next, dag_)) {
      if (dag_.insert(b).status == InsertStatus::kInserted) {
        queue.push_back(b.id());
        released.push_back(b);
      }
    }
  }
  refresh_commits(out);
  for (const auto& b : released) accept_block(b, out);

  auto waiting = std::move(pending_proposals_);
  pending_proposals_.clear();
  for (auto& [proposal, from] : waiting) on_proposal(proposal, from, out);

  if (phase_ == Phase::kCreatorCollecting) try_create_block(out);
}

void Node::accept_block(const Block& block, Actions& out) {
  if (block.round() < round_) return;
  current_ = Position::of(block.id());
  last_result_ = block;
  enter_round(block.round().next(), RoundExit::kBlock, out);
}

void Node::on_proposal(const Proposal& proposal, NodeId from, Actions& out) {
  auto check = validate_proposal(dag_, proposal);
  if (!check.ok()) {
    if (*check.error == ProposalError::kUnknownBlock) {
      pending_proposals_.emplace_back(proposal, from);
      request_missing(check.missing, from, out);
    } else {
      out.push_back(Dropped{"proposal", std::string(to_string(*check.error))});
    }
    return;
  }
  if (check.round < round_) return;
  current_ = check.position;
  last_result_ = proposal;
  enter_round(check.round.next(), RoundExit::kProposal, out);
}

void Node::refresh_commits(Actions& out) {
  auto now = committed_transactions(dag_);
  std::vector<TxId> fresh;
  std::set_difference(now.begin(), now.end(), committed_.begin(), committed_.end(), std::back_inserter(fresh));
  if (fresh.empty()) return;
  committed_ = std::move(now);
  std::erase_if(mempool_, [this](const Transaction& tx) { return committed_.count(tx.id()) != 0; });
  for (const auto& id : fresh) mempool_ids_.erase(id);
  out.push_back(CommitNotice{std::move(fresh)});
}

// ---------------------------------------------------------------------------
// Timeouts

void Node::on_timer(const TimerFired& timer, Actions& out) {
  if (timer.round != round_) return;
  if (timer.kind == TimerKind::kCreator) {
    if (phase_ == Phase::kCreatorCollecting) propose(out);
    return;
  }
  if (!timeout_sent_.insert(round_).second) return;
  auto msg = TimeoutMsg::issue(round_, *signer_);
  out.push_back(Send{std::nullopt, msg});
  timeouts_[round_].emplace(config_.id, msg);
  check_timeouts(out);
}

void Node::on_timeout(const TimeoutMsg& msg, NodeId from, Actions& out) {
  if (msg.issuer().index >= config_.committee.n || !msg.verify(*config_.committee.verifier)) {
    out.push_back(Dropped{"timeout", "bad_signature"});
    return;
  }
  if (msg.round < round_) {
    if (last_result_ && from != config_.id) {
      std::visit([&](const auto& r) { out.push_back(Send{from, r}); }, *last_result_);
    }
    return;
  }
  timeouts_[msg.round].emplace(msg.issuer(), msg);
  check_timeouts(out);
}

void Node::on_bundle(const TimeoutBundle& bundle, Actions& out) {
  if (bundle.round < round_) return;
  if (!validate_timeout_bundle(bundle, config_.committee)) {
    out.push_back(Dropped{"timeout_bundle", "invalid"});
    return;
  }
  for (const auto& m : bundle.msgs) timeouts_[bundle.round].emplace(m.issuer(), m);
  check_timeouts(out);
}

void Node::check_timeouts(Actions& out) {
  std::optional<Round> best;
  for (const auto& [r, msgs] : timeouts_) {
    if (r >= round_ && msgs.size() >= config_.committee.quorum()) best = r;
  }
  if (!best) return;
  TimeoutBundle bundle{*best, {}};
  for (const auto& [issuer, m] : timeouts_.at(*best)) {
    if (bundle.msgs.size() == config_.committee.quorum()) break;
    bundle.msgs.push_back(m);
  }
  out.push_back(Send{std::nullopt, bundle});
  last_result_ = bundle;
  enter_round(best->next(), RoundExit::kTimeouts, out);
}

void Node::on_fetch(const FetchRequest& req, NodeId from, Actions& out) {
  if (!dag_.contains(req.block)) {
    out.push_back(Dropped{"fetch_request", "unknown_block"});
    return;
  }
  out.push_back(Send{from, FetchResponse{dag_.block(req.block)}});
}

}  // namespace permitbft
