#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "permitbft/crypto.hpp"
#include "permitbft/dag.hpp"
#include "permitbft/ledger.hpp"
#include "permitbft/types.hpp"
#include "permitbft/validation.hpp"

namespace permitbft::testing {

/// Committee with keys for every member and helpers for hand-built blocks.
struct Fixture {
  std::uint32_t n;
  std::uint32_t f;
  std::shared_ptr<SimulatedKeyRing> keys;
  Committee committee;
  std::vector<Transaction> mints;
  Block genesis;

  explicit Fixture(std::uint32_t n_ = 4, std::vector<Transaction> mints_ = {})
      : n(n_),
        f((n_ - 1) / 3),
        keys(SimulatedKeyRing::create(n_, 0)),
        committee{n_, (n_ - 1) / 3, keys},
        mints(std::move(mints_)),
        genesis(Block::genesis(n_, mints)) {}

  std::shared_ptr<const Signer> signer(std::uint32_t i) const { return keys->signer_for(NodeId{i}); }

  Permit permit(std::uint32_t issuer, std::uint64_t round, Position pos) const {
    return Permit::issue(Round{round}, std::move(pos), *signer(issuer));
  }

  std::vector<std::uint32_t> lowest_issuers() const {
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 0; i < committee.quorum(); ++i) out.push_back(i);
    return out;
  }

  Proof proof(std::uint64_t round, const Position& pos, std::vector<std::uint32_t> issuers = {}) const {
    if (issuers.empty()) issuers = lowest_issuers();
    Proof p;
    for (auto i : issuers) p.permits.push_back(permit(i, round, pos));
    return p;
  }

  Block block(std::uint64_t round, const Position& pos, std::vector<Transaction> txs = {}) const {
    return Block::create(proof(round, pos), std::move(txs), *signer(static_cast<std::uint32_t>(round % n)));
  }

  BlockDag dag() const { return BlockDag(genesis, committee); }
};

inline Position pos(std::initializer_list<BlockId> ids) { return Position(std::vector<BlockId>(ids)); }

inline Transaction spend(const Transaction& src, std::uint32_t index, const std::string& owner, std::uint64_t nonce = 0) {
  return Transaction({OutputRef{src.id(), index}}, {TxOutput{owner, src.outputs()[index].amount}}, nonce);
}

/// A random dag of at most `max_blocks` blocks including genesis. Blocks carry
/// transactions over a small pool of outputs so double spends are common.
struct RandomDag {
  Fixture fx;
  std::vector<Block> blocks;  // non-genesis, in insertion order
};

inline RandomDag random_dag(std::uint64_t seed, std::size_t max_blocks = 8) {
  std::mt19937_64 rng(seed);
  auto pick = [&rng](std::size_t bound) { return static_cast<std::size_t>(rng() % bound); };
  std::vector<Transaction> mints;
  for (std::uint64_t i = 0; i < 3; ++i) mints.push_back(Transaction::mint("m" + std::to_string(i), 10 + i, i));
  RandomDag out{Fixture(4, mints), {}};

  std::vector<OutputRef> refs;
  std::map<OutputRef, std::uint64_t> amount;
  for (const auto& m : mints) {
    refs.push_back({m.id(), 0});
    amount[{m.id(), 0}] = m.outputs()[0].amount;
  }
  std::vector<Transaction> made;
  std::vector<BlockId> ids{out.fx.genesis.id()};
  const std::size_t count = 1 + pick(max_blocks - 1);
  std::uint64_t nonce = 100;
  for (std::size_t k = 0; k < count; ++k) {
    std::set<BlockId> parents;
    const std::size_t width = 1 + (pick(3) == 0 ? 1 : 0) + (pick(8) == 0 ? 1 : 0);
    // Favour recent blocks so the graph has some length.
    for (std::size_t w = 0; w < width; ++w) {
      const std::size_t span = std::min<std::size_t>(ids.size(), 3);
      parents.insert(ids[ids.size() - 1 - pick(span)]);
      if (pick(5) == 0) parents.insert(ids[pick(ids.size())]);
    }
    std::vector<Transaction> txs;
    const std::size_t ntx = pick(3);
    for (std::size_t t = 0; t < ntx; ++t) {
      if (!made.empty() && pick(6) == 0) {
        txs.push_back(made[pick(made.size())]);
        continue;
      }
      const auto ref = refs[pick(refs.size())];
      Transaction tx({ref}, {TxOutput{"o" + std::to_string(nonce), amount[ref]}}, nonce++);
      refs.push_back({tx.id(), 0});
      amount[{tx.id(), 0}] = amount[ref];
      made.push_back(tx);
      txs.push_back(tx);
    }
    // Drop repeats within one block.
    std::vector<Transaction> unique;
    for (const auto& t : txs) {
      if (std::none_of(unique.begin(), unique.end(), [&](const Transaction& u) { return u == t; })) unique.push_back(t);
    }
    auto b = out.fx.block(k + 1, Position(std::vector<BlockId>(parents.begin(), parents.end())), unique);
    ids.push_back(b.id());
    out.blocks.push_back(b);
  }
  return out;
}

inline BlockDag build(const RandomDag& r) {
  auto dag = r.fx.dag();
  for (const auto& b : r.blocks) dag.insert(b);
  return dag;
}

/// Direct transcription of the block relations over an explicit edge list.
/// Shares nothing with BlockDag beyond the Block type.
struct BruteDag {
  std::vector<Block> blocks;  // index 0 is genesis
  std::map<BlockId, std::size_t> index;
  std::vector<std::vector<std::size_t>> parents;
  std::vector<std::vector<std::size_t>> children;
  std::vector<std::uint32_t> depth;

  BruteDag(const Block& genesis, const std::vector<Block>& rest) {
    blocks.push_back(genesis);
    blocks.insert(blocks.end(), rest.begin(), rest.end());
    for (std::size_t i = 0; i < blocks.size(); ++i) index[blocks[i].id()] = i;
    parents.resize(blocks.size());
    children.resize(blocks.size());
    for (std::size_t i = 1; i < blocks.size(); ++i) {
      for (const auto& p : blocks[i].position().blocks()) {
        parents[i].push_back(index.at(p));
        children[index.at(p)].push_back(i);
      }
    }
    // Breadth-first search from genesis along child edges.
    depth.assign(blocks.size(), UINT32_MAX);
    std::queue<std::size_t> q;
    depth[0] = 0;
    q.push(0);
    while (!q.empty()) {
      auto u = q.front();
      q.pop();
      for (auto c : children[u]) {
        if (depth[c] == UINT32_MAX) {
          depth[c] = depth[u] + 1;
          q.push(c);
        }
      }
    }
  }

  bool committed(std::size_t i) const { return !children[i].empty(); }

  /// True iff `a` is reachable from `b` by following parent edges.
  bool on_path(std::size_t a, std::size_t b) const {
    std::vector<std::size_t> stack{b};
    std::set<std::size_t> seen;
    while (!stack.empty()) {
      auto u = stack.back();
      stack.pop_back();
      if (u == a) return true;
      if (!seen.insert(u).second) continue;
      for (auto p : parents[u]) stack.push_back(p);
    }
    return false;
  }

  std::uint32_t depth_of(const Position& p) const {
    std::uint32_t d = UINT32_MAX;
    for (const auto& id : p.blocks()) d = std::min(d, depth[index.at(id)]);
    return d;
  }

  bool respects(const Position& p, std::size_t b) const {
    for (const auto& id : p.blocks()) {
      if (on_path(b, index.at(id))) return true;
    }
    return !committed(b) && depth[b] + 2 <= depth_of(p);
  }

  std::size_t respected_count(const Position& p) const {
    std::size_t c = 0;
    for (std::size_t i = 0; i < blocks.size(); ++i) c += respects(p, i) ? 1 : 0;
    return c;
  }

  /// Enumerates every (block, transaction, child) triple.
  std::set<TxId> committed_txs() const {
    std::set<TxId> out;
    for (std::size_t b = 1; b < blocks.size(); ++b) {
      for (const auto& tx : blocks[b].transactions()) {
        for (auto c : children[b]) {
          bool clean = true;
          for (std::size_t x = 0; x < blocks.size() && clean; ++x) {
            if (x == 0 || !committed(x) || !respects(blocks[c].position(), x)) continue;
            for (const auto& other : blocks[x].transactions()) {
              if (conflicts(tx, other)) clean = false;
            }
          }
          if (clean) out.insert(tx.id());
        }
      }
    }
    return out;
  }

  std::set<OutputRef> frozen() const {
    const auto ok = committed_txs();
    std::map<OutputRef, std::set<TxId>> spenders;
    for (std::size_t b = 1; b < blocks.size(); ++b) {
      if (!committed(b)) continue;
      for (const auto& tx : blocks[b].transactions()) {
        for (const auto& in : tx.inputs()) spenders[in].insert(tx.id());
      }
    }
    std::set<OutputRef> out;
    for (const auto& [ref, txs] : spenders) {
      if (txs.size() < 2) continue;
      if (std::none_of(txs.begin(), txs.end(), [&](const TxId& t) { return ok.count(t) != 0; })) out.insert(ref);
    }
    return out;
  }

  /// Smallest subset of the union of `inputs` respecting every member, by
  /// (size, respected count, ids).
  Position minimal(const std::vector<Position>& inputs) const {
    std::set<BlockId> u;
    for (const auto& p : inputs) u.insert(p.blocks().begin(), p.blocks().end());
    std::vector<BlockId> members(u.begin(), u.end());
    std::optional<std::tuple<std::size_t, std::size_t, Position>> best;
    for (std::uint32_t mask = 1; mask < (1u << members.size()); ++mask) {
      std::vector<BlockId> chosen;
      for (std::size_t i = 0; i < members.size(); ++i) {
        if (mask & (1u << i)) chosen.push_back(members[i]);
      }
      Position cand(chosen);
      bool ok = true;
      for (const auto& m : members) ok = ok && respects(cand, index.at(m));
      if (!ok) continue;
      auto key = std::make_tuple(cand.size(), respected_count(cand), cand);
      if (!best || key < *best) best = key;
    }
    return std::get<2>(*best);
  }
};

/// Finalization rule applied to the text export plus the committed set.
inline LedgerView linearize_from_export(const std::string& exported, const BlockDag& dag,
                                        const std::set<TxId>& committed) {
  struct Row {
    std::string id;
    std::uint64_t round;
    long creator;
    std::uint32_t depth;
    bool committed;
  };
  std::vector<Row> rows;
  std::istringstream in(exported);
  for (std::string line; std::getline(in, line);) {
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    const auto m = tok.size();
    if (tok[m - 3] == "-") continue;  // genesis
    rows.push_back({tok[0], std::stoull(tok[m - 4]), std::stol(tok[m - 3]),
                    static_cast<std::uint32_t>(std::stoul(tok[m - 2])), tok[m - 1] == "1"});
  }
  std::uint32_t top = 0;
  for (const auto& r : rows) {
    if (r.committed) top = std::max(top, r.depth);
  }
  std::vector<Row> done;
  for (const auto& r : rows) {
    if (r.committed) done.push_back(r);
  }
  std::sort(done.begin(), done.end(), [](const Row& a, const Row& b) {
    return std::tie(a.depth, a.round, a.creator, a.id) < std::tie(b.depth, b.round, b.creator, b.id);
  });
  std::map<std::string, const Block*> by_hex;
  for (std::size_t i = 0; i < dag.size(); ++i) by_hex[dag.block_at(i).id().digest.hex()] = &dag.block_at(i);
  LedgerView v;
  std::set<TxId> seen;
  for (const auto& r : done) {
    for (const auto& tx : by_hex.at(r.id)->transactions()) {
      if (!committed.count(tx.id()) || !seen.insert(tx.id()).second) continue;
      (r.depth + 2 <= top ? v.finalized_order : v.executable_head).push_back(tx.id());
    }
  }
  return v;
}

}  // namespace permitbft::testing
