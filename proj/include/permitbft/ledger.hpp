#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "permitbft/dag.hpp"

namespace permitbft {

/// Ledger derived from a dag snapshot. Genesis mints are not listed; they
/// form the bootstrap UTXO set.
struct LedgerView {
  std::vector<TxId> finalized_order;
  std::vector<TxId> executable_head;
  std::set<TxId> committed;
  std::set<OutputRef> frozen;
  std::set<TxId> frozen_spenders;   // uncommitted txs spending a frozen ref
  std::map<TxId, Transaction> txs;  // committed and frozen-spender bodies
};

/// Transactions in a committed block b for which some child of b respects
/// no committed block holding a conflicting transaction.
std::set<TxId> committed_transactions(const BlockDag& dag);

/// Outputs spent by two or more distinct transactions in committed blocks,
/// none of which is committed.
std::set<OutputRef> frozen_refs(const BlockDag& dag);

/// A committed block finalizes once some committed block sits at least two
/// levels deeper. Finalized blocks are ordered by (depth, round, creator, id).
LedgerView linearize(const BlockDag& dag);

class InvalidSpend : public std::logic_error {
 public:
  InvalidSpend(const TxId& tx, const OutputRef& ref)
      : std::logic_error("transaction " + tx.str() + " spends unavailable output " + ref.str()) {}
};

struct UtxoSet {
  std::map<OutputRef, TxOutput> spendable;
  std::map<OutputRef, TxOutput> frozen;

  std::uint64_t spendable_total() const;
  std::uint64_t frozen_total() const;
  bool operator==(const UtxoSet&) const = default;
};

/// Outputs of the genesis mints.
UtxoSet genesis_state(const Block& genesis);

/// Moves frozen refs out of the spendable set, then applies the finalized
/// order followed by the head. Throws InvalidSpend.
UtxoSet execute(const LedgerView& view, const UtxoSet& state);

/// `tx_id final|head|frozen-input` per line: finalized order, then head, then
/// uncommitted transactions touching a frozen ref sorted by id.
std::string dump_ledger(const LedgerView& view);

}  // namespace permitbft
