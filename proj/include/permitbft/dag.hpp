#pragma once

#include <boost/dynamic_bitset.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "permitbft/types.hpp"
#include "permitbft/validation.hpp"

namespace permitbft {

class UnknownBlock : public std::out_of_range {
 public:
  explicit UnknownBlock(const BlockId& id) : std::out_of_range("unknown block " + id.str()), id_(id) {}
  const BlockId& id() const { return id_; }

 private:
  BlockId id_;
};

/// Bitset over dag insertion indices.
using BlockSet = boost::dynamic_bitset<>;

enum class InsertStatus { kInserted, kDuplicate, kPending, kRejected };
enum class RejectReason { kBadProof, kBadSignature, kWrongCreator };

std::string_view to_string(RejectReason reason);

struct InsertResult {
  InsertStatus status = InsertStatus::kInserted;
  std::vector<BlockId> missing;          // kPending
  std::optional<RejectReason> reason;    // kRejected
  std::optional<ProofError> proof_error; // kRejected with kBadProof

  bool stored() const { return status == InsertStatus::kInserted || status == InsertStatus::kDuplicate; }
};

/// Append-only block graph rooted at genesis. Edges run from a block to the
/// members of its proof position. Every stored block's parents are stored.
class BlockDag {
 public:
  BlockDag(Block genesis, Committee committee);

  /// Validates proof, creator and signature, then stores the block if all
  /// parents are known. Leaves the dag untouched unless it returns kInserted.
  InsertResult insert(const Block& block);
  /// The validation half of insert, without storing.
  InsertResult check(const Block& block) const;

  bool contains(const BlockId& id) const { return index_.count(id) != 0; }
  const Block& block(const BlockId& id) const { return entry(id).block; }
  const Block& genesis() const { return entries_.front().block; }
  const Committee& committee() const { return committee_; }
  std::size_t size() const { return entries_.size(); }

  std::size_t index_of(const BlockId& id) const;
  const Block& block_at(std::size_t index) const { return entries_.at(index).block; }
  std::uint32_t depth_at(std::size_t index) const { return entries_.at(index).depth; }
  bool committed_at(std::size_t index) const { return !entries_.at(index).children.empty(); }
  const BlockSet& ancestors_at(std::size_t index) const { return entries_.at(index).ancestors; }

  /// Shortest path length from genesis.
  std::uint32_t depth(const BlockId& id) const { return entry(id).depth; }
  /// Depth of the shallowest member.
  std::uint32_t depth(const Position& position) const;

  /// A block is committed once some stored block has it as a parent.
  bool is_committed(const BlockId& id) const { return !entry(id).children.empty(); }
  std::span<const BlockId> children(const BlockId& id) const { return entry(id).children; }

  /// True iff `id` lies on a genesis-to-position path, or is an uncommitted
  /// block at most depth(position) - 2 deep. Evaluated against current state.
  bool respects(const Position& position, const BlockId& id) const;
  /// Every stored block respected by `position`, as a bitset over indices.
  BlockSet respected_set(const Position& position) const;
  /// True iff `by` respects every member of `target`.
  bool respects_all(const Position& by, const Position& target) const;

  std::vector<BlockId> missing_parents(const Block& block) const;
  /// Stored ids in insertion order.
  std::vector<BlockId> ids() const;

 private:
  struct Entry {
    Block block;
    std::uint32_t depth = 0;
    BlockSet ancestors;  // includes the block itself
    std::vector<BlockId> children;
  };

  const Entry& entry(const BlockId& id) const;

  Committee committee_;
  std::vector<Entry> entries_;
  std::map<BlockId, std::size_t> index_;
};

/// Smallest position (fewest members, then fewest respected blocks, then
/// lowest ids) built from the given positions' members that respects every
/// member of every input position. Throws UnknownBlock.
Position minimal_position(const BlockDag& dag, std::span<const Position> positions);

enum class ProposalError {
  kInsufficientPermits,
  kDuplicateIssuer,
  kMixedRound,
  kEmptyPosition,
  kBadSignature,
  kWrongCreator,
  kUnknownBlock,
  kNotMinimal,
};

std::string_view to_string(ProposalError err);

struct ProposalCheck {
  std::optional<ProposalError> error;
  Round round;
  Position position;
  std::vector<BlockId> missing;  // kUnknownBlock

  bool ok() const { return !error.has_value(); }
};

ProposalCheck validate_proposal(const BlockDag& dag, const Proposal& proposal);

/// Blocks held back until their parents arrive.
class PendingPool {
 public:
  /// Returns false if the block was already waiting.
  bool add(const Block& block, std::span<const BlockId> missing);
  /// Blocks waiting on `inserted` whose parents are now all in `dag`,
  /// removed from the pool, ordered by id.
  std::vector<Block> release(const BlockId& inserted, const BlockDag& dag);

  bool contains(const BlockId& id) const { return blocks_.count(id) != 0; }
  std::optional<Block> find(const BlockId& id) const;
  std::size_t size() const { return blocks_.size(); }

 private:
  std::map<BlockId, Block> blocks_;
  std::map<BlockId, std::set<BlockId>> waiting_on_;
};

/// One line per block in insertion order:
/// `block_id parent_ids... round creator depth committed_flag`.
std::string export_dag(const BlockDag& dag);

}  // namespace permitbft
