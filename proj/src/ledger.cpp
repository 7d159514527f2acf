#include "permitbft/ledger.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

namespace permitbft {

namespace {

struct Occurrence {
  std::size_t block;  // dag index
  const Transaction* tx;
};

// Shared pass over the committed part of the dag.
struct Analysis {
  std::vector<std::size_t> committed_blocks;                   // non-genesis, committed
  std::map<TxId, std::vector<std::size_t>> tx_blocks;          // tx -> committed blocks holding it
  std::map<TxId, const Transaction*> bodies;
  std::map<OutputRef, std::set<TxId>> spenders;                // input -> txs spending it
  std::set<TxId> committed;
};

Analysis analyze(const BlockDag& dag) {
  Analysis a;
  for (std::size_t i = 1; i < dag.size(); ++i) {
    if (!dag.committed_at(i)) continue;
    a.committed_blocks.push_back(i);
    for (const auto& tx : dag.block_at(i).transactions()) {
      a.tx_blocks[tx.id()].push_back(i);
      a.bodies.emplace(tx.id(), &tx);
      for (const auto& in : tx.inputs()) a.spenders[in].insert(tx.id());
    }
  }

  // Conflicting txs of each tx, as the set of committed blocks holding them.
  std::map<TxId, BlockSet> rival_blocks;
  for (const auto& [ref, txs] : a.spenders) {
    if (txs.size() < 2) continue;
    for (const auto& t : txs) {
      auto& bits = rival_blocks.try_emplace(t, BlockSet(dag.size())).first->second;
      for (const auto& u : txs) {
        if (u == t) continue;
        for (auto b : a.tx_blocks.at(u)) bits.set(b);
      }
    }
  }

  std::map<std::size_t, BlockSet> child_committed_view;  // child index -> respected committed blocks
  auto view_of = [&](std::size_t child) -> const BlockSet& {
    auto it = child_committed_view.find(child);
    if (it != child_committed_view.end()) return it->second;
    BlockSet r = dag.respected_set(dag.block_at(child).position());
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r.test(i) && !dag.committed_at(i)) r.reset(i);
    }
    return child_committed_view.emplace(child, std::move(r)).first->second;
  };

  for (const auto& [id, blocks] : a.tx_blocks) {
    auto rivals = rival_blocks.find(id);
    if (rivals == rival_blocks.end()) {
      a.committed.insert(id);
      continue;
    }
    bool ok = false;
    for (auto b : blocks) {
      for (const auto& child : dag.children(dag.block_at(b).id())) {
        if (!view_of(dag.index_of(child)).intersects(rivals->second)) {
          ok = true;
          break;
        }
      }
      if (ok) break;
    }
    if (ok) a.committed.insert(id);
  }
  return a;
}

std::set<OutputRef> frozen_from(const Analysis& a) {
  std::set<OutputRef> out;
  for (const auto& [ref, txs] : a.spenders) {
    if (txs.size() < 2) continue;
    if (std::none_of(txs.begin(), txs.end(), [&](const TxId& t) { return a.committed.count(t) != 0; })) {
      out.insert(ref);
    }
  }
  return out;
}

}  // namespace

std::set<TxId> committed_transactions(const BlockDag& dag) { return analyze(dag).committed; }

std::set<OutputRef> frozen_refs(const BlockDag& dag) { return frozen_from(analyze(dag)); }

LedgerView linearize(const BlockDag& dag) {
  const Analysis a = analyze(dag);
  LedgerView view;
  view.committed = a.committed;
  view.frozen = frozen_from(a);

  std::uint32_t max_committed_depth = 0;
  for (auto i : a.committed_blocks) max_committed_depth = std::max(max_committed_depth, dag.depth_at(i));

  auto order = a.committed_blocks;
  auto key = [&dag](std::size_t i) {
    const auto& b = dag.block_at(i);
    return std::make_tuple(dag.depth_at(i), b.round(), b.creator(), b.id());
  };
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return key(x) < key(y); });

  std::set<TxId> placed;
  for (bool finalized_pass : {true, false}) {
    for (auto i : order) {
      const bool finalized = dag.depth_at(i) + 2 <= max_committed_depth;
      if (finalized != finalized_pass) continue;
      for (const auto& tx : dag.block_at(i).transactions()) {
        if (!a.committed.count(tx.id()) || !placed.insert(tx.id()).second) continue;
        (finalized ? view.finalized_order : view.executable_head).push_back(tx.id());
        view.txs.emplace(tx.id(), tx);
      }
    }
  }
  for (const auto& ref : view.frozen) {
    for (const auto& t : a.spenders.at(ref)) {
      view.frozen_spenders.insert(t);
      view.txs.emplace(t, *a.bodies.at(t));
    }
  }
  return view;
}

std::uint64_t UtxoSet::spendable_total() const {
  std::uint64_t sum = 0;
  for (const auto& [ref, out] : spendable) sum += out.amount;
  return sum;
}

std::uint64_t UtxoSet::frozen_total() const {
  std::uint64_t sum = 0;
  for (const auto& [ref, out] : frozen) sum += out.amount;
  return sum;
}

UtxoSet genesis_state(const Block& genesis) {
  UtxoSet state;
  for (const auto& tx : genesis.transactions()) {
    for (std::uint32_t i = 0; i < tx.outputs().size(); ++i) state.spendable.emplace(OutputRef{tx.id(), i}, tx.outputs()[i]);
  }
  return state;
}

UtxoSet execute(const LedgerView& view, const UtxoSet& state) {
  UtxoSet next = state;
  for (const auto& ref : view.frozen) {
    auto it = next.spendable.find(ref);
    if (it == next.spendable.end()) continue;
    next.frozen.insert(*it);
    next.spendable.erase(it);
  }
  auto apply = [&next, &view](const TxId& id) {
    const auto& tx = view.txs.at(id);
    for (const auto& in : tx.inputs()) {
      if (!next.spendable.count(in)) throw InvalidSpend(id, in);
    }
    for (const auto& in : tx.inputs()) next.spendable.erase(in);
    for (std::uint32_t i = 0; i < tx.outputs().size(); ++i) next.spendable.emplace(OutputRef{id, i}, tx.outputs()[i]);
  };
  for (const auto& id : view.finalized_order) apply(id);
  for (const auto& id : view.executable_head) apply(id);
  return next;
}

std::string dump_ledger(const LedgerView& view) {
  std::ostringstream out;
  for (const auto& id : view.finalized_order) out << id.digest.hex() << " final\n";
  for (const auto& id : view.executable_head) out << id.digest.hex() << " head\n";
  for (const auto& id : view.frozen_spenders) out << id.digest.hex() << " frozen-input\n";
  return out.str();
}

}  // namespace permitbft
