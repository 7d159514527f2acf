#include "permitbft/simulator.hpp"

#include <queue>

#include "permitbft/adversary.hpp"
#include "permitbft/delay_model.hpp"
#include "permitbft/trace.hpp"

namespace permitbft {

namespace {

struct StartNode {};
struct Injection {
  std::size_t index;
};
using EventBody = std::variant<StartNode, Deliver, TimerFired, Injection>;

struct Event {
  Ticks time;
  int rank;  // deliveries and injections before timers at equal times
  std::uint64_t seq;
  NodeId node;
  EventBody body;
};

struct Later {
  bool operator()(const Event& a, const Event& b) const {
    return std::tie(a.time, a.rank, a.seq) > std::tie(b.time, b.rank, b.seq);
  }
};

void check_signature(const SignatureVerifier& v, const std::set<NodeId>& byz, const Signature& sig, const Digest& payload) {
  if (byz.count(sig.signer)) return;
  if (!v.verify(sig.signer, payload, sig)) {
    throw ForgeryAttempt("byzantine output carries an invalid signature of honest " + sig.signer.str());
  }
}

void check_permits(const SignatureVerifier& v, const std::set<NodeId>& byz, std::span<const Permit> permits) {
  for (const auto& p : permits) check_signature(v, byz, p.signature, Permit::signing_digest(p.round, p.position));
}

void check_forgery(const SignatureVerifier& v, const std::set<NodeId>& byz, const Message& msg) {
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, Permit>) {
          check_permits(v, byz, std::span<const Permit>(&m, 1));
        } else if constexpr (std::is_same_v<M, Block> || std::is_same_v<M, FetchResponse>) {
          const Block* b;
          if constexpr (std::is_same_v<M, Block>) {
            b = &m;
          } else {
            b = &m.block;
          }
          if (b->is_genesis()) return;
          check_signature(v, byz, b->signature(), Block::signing_digest(b->proof(), b->transactions()));
          check_permits(v, byz, b->proof().permits);
        } else if constexpr (std::is_same_v<M, Proposal>) {
          check_signature(v, byz, m.signature, Proposal::signing_digest(m.position, m.permits));
          check_permits(v, byz, m.permits);
        } else if constexpr (std::is_same_v<M, TimeoutMsg>) {
          check_signature(v, byz, m.signature, TimeoutMsg::signing_digest(m.round));
        } else if constexpr (std::is_same_v<M, TimeoutBundle>) {
          for (const auto& t : m.msgs) check_signature(v, byz, t.signature, TimeoutMsg::signing_digest(t.round));
        }
      },
      msg);
}

class Simulation {
 public:
  Simulation(const Scenario& s, std::uint64_t seed, const RunOptions& opt)
      : s_(s), opt_(opt), keys_(SimulatedKeyRing::create(s.n, seed)), delays_(s, seed), trace_(opt.keep_trace) {
    committee_ = Committee{s.n, s.f, keys_};
    const Block genesis = s.genesis();
    std::set<NodeId> honest;
    for (std::uint32_t i = 0; i < s.n; ++i) {
      NodeId id{i};
      NodeConfig cfg{id, committee_, s.timers.creator_timeout, s.timers.round_timeout};
      auto byz = s.byzantine.find(id);
      if (byz == s.byzantine.end()) {
        honest_.push_back(std::make_unique<Node>(cfg, genesis, keys_->signer_for(id)));
        byz_.push_back(nullptr);
        honest.insert(id);
      } else {
        honest_.push_back(nullptr);
        byz_.push_back(std::make_unique<ByzantineNode>(cfg, genesis, keys_->signer_for(id), byz->second));
        byz_ids_.insert(id);
      }
    }
    oracle_ = std::make_shared<SafetyOracle>(committee_, genesis, honest);
    result_.seed = seed;
    trace_.header(s.digest, seed, s.n, s.f);

    for (std::uint32_t i = 0; i < s.n; ++i) push(0, 0, NodeId{i}, StartNode{});
    for (std::size_t k = 0; k < s.txs.size(); ++k) {
      const auto& inj = s.txs[k];
      push(inj.at, 0, inj.to, Injection{k});
      result_.txs.push_back(TxRecord{inj.label, inj.tx.id(), inj.to, s.is_honest(inj.to), inj.at, std::nullopt});
    }
  }

  RunResult run() {
    while (!queue_.empty()) {
      if (opt_.event_limit && result_.events >= *opt_.event_limit) {
        result_.hit_event_limit = true;
        break;
      }
      Event ev = queue_.top();
      if (ev.time > s_.horizon) break;
      queue_.pop();
      ++result_.events;
      now_ = ev.time;
      seq_ = ev.seq;
      process(ev);
      after_event();
      if (!result_.violations.empty() && opt_.stop_on_violation) {
        result_.violation_context = trace_.tail();
        break;
      }
    }
    result_.end_time = now_;
    for (std::uint32_t i = 0; i < s_.n; ++i) {
      if (!honest_[i]) continue;
      auto ids = honest_[i]->dag().ids();
      result_.honest_blocks[NodeId{i}] = std::set<BlockId>(ids.begin(), ids.end());
      result_.final_rounds[NodeId{i}] = honest_[i]->round();
    }
    result_.trace = trace_.lines();
    result_.trace_digest = trace_.finish();
    result_.oracle = oracle_;
    return std::move(result_);
  }

 private:
  void push(Ticks time, int rank, NodeId node, EventBody body) {
    queue_.push(Event{time, rank, next_seq_++, node, std::move(body)});
  }

  void record(NodeId actor, std::string_view kind, const Digest& payload, const std::string& detail) {
    trace_.record(now_, seq_, actor.str(), kind, payload, detail);
  }

  void process(const Event& ev) {
    std::vector<NodeAction> actions;
    const NodeId id = ev.node;
    std::optional<NodeEvent> node_event;
    if (std::holds_alternative<StartNode>(ev.body)) {
      record(id, "start", Digest{}, "-");
    } else if (const auto* d = std::get_if<Deliver>(&ev.body)) {
      record(id, "recv." + std::string(kind_name(d->msg)), digest_of(d->msg), "from=" + d->from.str());
      node_event = *d;
    } else if (const auto* t = std::get_if<TimerFired>(&ev.body)) {
      record(id, "timer." + std::string(to_string(t->kind)), Digest{}, "round=" + std::to_string(t->round.value));
      node_event = *t;
    } else {
      const auto& inj = s_.txs[std::get<Injection>(ev.body).index];
      record(id, "inject", inj.tx.id().digest, inj.label);
      node_event = InjectTx{inj.tx};
    }

    if (honest_[id.index]) {
      actions = node_event ? honest_[id.index]->handle(*node_event) : honest_[id.index]->start();
    } else {
      GlobalView view{now_, max_honest_round_};
      auto& b = *byz_[id.index];
      actions = node_event ? b.handle(*node_event, view) : b.start(view);
    }
    for (auto& a : actions) apply(id, std::move(a));
  }

  void apply(NodeId id, NodeAction action) {
    const bool honest = honest_[id.index] != nullptr;
    std::visit(
        [&](auto& a) {
          using A = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<A, Send>) {
            send(id, honest, a);
          } else if constexpr (std::is_same_v<A, ArmTimer>) {
            push(now_ + a.after, 1, id, TimerFired{a.kind, a.round});
          } else if constexpr (std::is_same_v<A, PermitIssued>) {
            if (honest) oracle_->observe_permit(id, a.permit);
          } else if constexpr (std::is_same_v<A, RoundEntered>) {
            record(id, "round", Digest{}, "r=" + std::to_string(a.round.value) + " via=" + std::string(to_string(a.via)));
            if (honest) {
              oracle_->observe_round(id, a.round);
              result_.rounds.push_back(RoundEntry{now_, id, a.round, a.via});
              max_honest_round_ = std::max(max_honest_round_, a.round);
            }
          } else if constexpr (std::is_same_v<A, CommitNotice>) {
            record(id, "commit", Digest{}, "txs=" + std::to_string(a.txs.size()));
          } else {
            record(id, "drop." + a.what, Digest{}, a.reason);
          }
        },
        action);
  }

  void observe_created(NodeId from, const Message& msg) {
    const Block* block = nullptr;
    if (const auto* b = std::get_if<Block>(&msg)) block = b;
    if (const auto* r = std::get_if<FetchResponse>(&msg)) block = &r->block;
    if (block && !block->is_genesis() && seen_.insert(block->id().digest).second) {
      oracle_->observe_block(*block);
      if (block->creator() == from) {
        result_.creations.push_back(Creation{now_, from, block->round(), true, block->id()});
      }
    }
    if (const auto* p = std::get_if<Proposal>(&msg)) {
      if (p->creator() == from && seen_.insert(digest_of(msg)).second) {
        result_.creations.push_back(Creation{now_, from, p->round(), false, std::nullopt});
      }
    }
  }

  void send(NodeId from, bool honest, const Send& a) {
    if (!honest) check_forgery(*keys_, byz_ids_, a.msg);
    if (honest) {
      if (const auto* t = std::get_if<TimeoutMsg>(&a.msg); t && t->issuer() == from) {
        oracle_->observe_timeout(from, t->round);
      }
    }
    observe_created(from, a.msg);
    const auto kind = kind_name(a.msg);
    const auto digest = digest_of(a.msg);
    const auto round = round_of(a.msg);
    auto deliver = [&](NodeId to) {
      if (to == from) return;
      const Ticks at = delays_.delivery_time(from, to, now_);
      record(from, "send." + std::string(kind), digest, "to=" + to.str() + " at=" + std::to_string(at));
      result_.messages.push_back(MessageRecord{now_, from, to, kind, round});
      push(at, 0, to, Deliver{a.msg, from});
    };
    if (a.to) {
      deliver(*a.to);
    } else {
      for (std::uint32_t i = 0; i < s_.n; ++i) deliver(NodeId{i});
    }
  }

  void after_event() {
    auto found = oracle_->check();
    if (oracle_->version() != reported_version_) {
      reported_version_ = oracle_->version();
      trace_.record(now_, seq_, "oracle", "state", Digest{},
                    "blocks=" + std::to_string(oracle_->dag().size()) + " promised=" + std::to_string(oracle_->promised().size()) +
                        " committed_txs=" + std::to_string(oracle_->committed_txs().size()));
    }
    for (auto& tx : result_.txs) {
      if (!tx.committed && oracle_->committed_txs().count(tx.id)) tx.committed = now_;
    }
    if (!s_.checks.safety) return;
    for (auto& v : found) {
      trace_.record(now_, seq_, "oracle", "violation." + std::string(to_string(v.kind)), Digest{}, v.detail);
      if (!result_.violation_time) result_.violation_time = now_;
      result_.violations.push_back(std::move(v));
    }
  }

  const Scenario& s_;
  RunOptions opt_;
  std::shared_ptr<SimulatedKeyRing> keys_;
  Committee committee_;
  DelayModel delays_;
  TraceWriter trace_;
  std::vector<std::unique_ptr<Node>> honest_;
  std::vector<std::unique_ptr<ByzantineNode>> byz_;
  std::set<NodeId> byz_ids_;
  std::shared_ptr<SafetyOracle> oracle_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t next_seq_ = 0;
  Ticks now_ = 0;
  std::uint64_t seq_ = 0;
  Round max_honest_round_;
  std::set<Digest> seen_;
  std::uint64_t reported_version_ = 0;
  RunResult result_;
};

}  // namespace

RunResult run_scenario(const Scenario& scenario, std::uint64_t seed, const RunOptions& options) {
  return Simulation(scenario, seed, options).run();
}

}  // namespace permitbft
