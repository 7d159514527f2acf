#include "permitbft/dag.hpp"

#include <algorithm>
#include <limits>
#include <sstream>
#include <tuple>

namespace permitbft {

std::string_view to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::kBadProof:
      return "bad_proof";
    case RejectReason::kBadSignature:
      return "bad_signature";
    case RejectReason::kWrongCreator:
      return "wrong_creator";
  }
  return "unknown";
}

std::string_view to_string(ProposalError err) {
  switch (err) {
    case ProposalError::kInsufficientPermits:
      return "insufficient_permits";
    case ProposalError::kDuplicateIssuer:
      return "duplicate_issuer";
    case ProposalError::kMixedRound:
      return "mixed_round";
    case ProposalError::kEmptyPosition:
      return "empty_position";
    case ProposalError::kBadSignature:
      return "bad_signature";
    case ProposalError::kWrongCreator:
      return "wrong_creator";
    case ProposalError::kUnknownBlock:
      return "unknown_block";
    case ProposalError::kNotMinimal:
      return "not_minimal";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

BlockDag::BlockDag(Block genesis, Committee committee) : committee_(std::move(committee)) {
  Entry root{std::move(genesis), 0, BlockSet(1), {}};
  root.ancestors.set(0);
  index_.emplace(root.block.id(), 0);
  entries_.push_back(std::move(root));
}

const BlockDag::Entry& BlockDag::entry(const BlockId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw UnknownBlock(id);
  return entries_[it->second];
}

std::size_t BlockDag::index_of(const BlockId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw UnknownBlock(id);
  return it->second;
}

std::vector<BlockId> BlockDag::missing_parents(const Block& block) const {
  std::vector<BlockId> missing;
  for (const auto& parent : block.position().blocks()) {
    if (!contains(parent)) missing.push_back(parent);
  }
  return missing;
}

std::vector<BlockId> BlockDag::ids() const {
  std::vector<BlockId> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.block.id());
  return out;
}

InsertResult BlockDag::check(const Block& block) const {
  InsertResult result;
  if (contains(block.id())) {
    result.status = InsertStatus::kDuplicate;
    return result;
  }
  auto reject = [&result](RejectReason reason) {
    result.status = InsertStatus::kRejected;
    result.reason = reason;
    return result;
  };
  if (block.is_genesis()) return reject(RejectReason::kBadProof);
  auto proof = validate_proof(block.proof(), committee_);
  if (!proof.ok()) {
    result.proof_error = proof.error;
    return reject(RejectReason::kBadProof);
  }
  if (block.creator() != creator_of(proof.round, committee_.n)) return reject(RejectReason::kWrongCreator);
  auto payload = Block::signing_digest(block.proof(), block.transactions());
  if (!committee_.verifier->verify(block.creator(), payload, block.signature())) {
    return reject(RejectReason::kBadSignature);
  }
  auto missing = missing_parents(block);
  if (!missing.empty()) {
    result.status = InsertStatus::kPending;
    result.missing = std::move(missing);
  }
  return result;
}

InsertResult BlockDag::insert(const Block& block) {
  auto result = check(block);
  if (result.status != InsertStatus::kInserted) return result;

  const std::size_t index = entries_.size();
  Entry e{block, std::numeric_limits<std::uint32_t>::max(), BlockSet(index + 1), {}};
  e.ancestors.set(index);
  for (const auto& parent : block.position().blocks()) {
    auto& p = entries_[index_.at(parent)];
    e.depth = std::min(e.depth, p.depth + 1);
    BlockSet anc = p.ancestors;
    anc.resize(index + 1);
    e.ancestors |= anc;
    p.children.push_back(block.id());
  }
  index_.emplace(block.id(), index);
  entries_.push_back(std::move(e));
  return result;
}

std::uint32_t BlockDag::depth(const Position& position) const {
  if (position.empty()) throw std::invalid_argument("depth of empty position");
  std::uint32_t d = std::numeric_limits<std::uint32_t>::max();
  for (const auto& id : position.blocks()) d = std::min(d, depth(id));
  return d;
}

bool BlockDag::respects(const Position& position, const BlockId& id) const {
  const auto target = index_of(id);
  for (const auto& member : position.blocks()) {
    const auto& anc = entry(member).ancestors;
    if (target < anc.size() && anc.test(target)) return true;
  }
  const auto& t = entries_[target];
  return t.children.empty() && t.depth + 2 <= depth(position);
}

BlockSet BlockDag::respected_set(const Position& position) const {
  const auto n = entries_.size();
  BlockSet out(n);
  for (const auto& member : position.blocks()) {
    BlockSet anc = entry(member).ancestors;
    anc.resize(n);
    out |= anc;
  }
  const auto d = depth(position);
  for (std::size_t i = 0; i < n; ++i) {
    if (entries_[i].children.empty() && entries_[i].depth + 2 <= d) out.set(i);
  }
  return out;
}

bool BlockDag::respects_all(const Position& by, const Position& target) const {
  for (const auto& id : target.blocks()) {
    if (!respects(by, id)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

Position minimal_position(const BlockDag& dag, std::span<const Position> positions) {
  std::vector<BlockId> members;
  for (const auto& p : positions) members.insert(members.end(), p.blocks().begin(), p.blocks().end());
  const Position all(std::move(members));
  if (all.empty()) throw std::invalid_argument("minimal_position of no blocks");
  for (const auto& id : all.blocks()) (void)dag.index_of(id);

  // For a candidate with shallowest member at depth >= D, every member of
  // `all` that is not stale at D must be an ancestor-or-self of a member, so
  // the maximal non-stale blocks at depth >= D are forced. The optimum is one
  // of these per-D candidates.
  std::set<std::uint32_t> depths;
  for (const auto& id : all.blocks()) depths.insert(dag.depth(id));

  std::optional<std::tuple<std::size_t, std::size_t, Position>> best;
  for (auto d : depths) {
    std::vector<std::size_t> high;
    for (const auto& id : all.blocks()) {
      const auto idx = dag.index_of(id);
      const bool stale = !dag.committed_at(idx) && dag.depth_at(idx) + 2 <= d;
      if (!stale && dag.depth_at(idx) >= d) high.push_back(idx);
    }
    std::vector<BlockId> maximal;
    for (auto u : high) {
      bool dominated = false;
      for (auto v : high) {
        if (v == u) continue;
        const auto& anc = dag.ancestors_at(v);
        if (u < anc.size() && anc.test(u)) {
          dominated = true;
          break;
        }
      }
      if (!dominated) maximal.push_back(dag.block_at(u).id());
    }
    if (maximal.empty()) continue;
    Position candidate(std::move(maximal));
    if (!dag.respects_all(candidate, all)) continue;
    auto key = std::make_tuple(candidate.size(), dag.respected_set(candidate).count(), candidate);
    if (!best || key < *best) best = std::move(key);
  }
  // The shallowest depth always yields the maximal elements of `all`, which
  // respect everything by ancestry.
  return std::get<2>(*best);
}

ProposalCheck validate_proposal(const BlockDag& dag, const Proposal& proposal) {
  ProposalCheck out;
  const auto& committee = dag.committee();
  if (auto err = check_permit_quorum(proposal.permits, committee)) {
    switch (*err) {
      case ProofError::kInsufficientPermits:
        out.error = ProposalError::kInsufficientPermits;
        break;
      case ProofError::kDuplicateIssuer:
        out.error = ProposalError::kDuplicateIssuer;
        break;
      case ProofError::kMixedRound:
        out.error = ProposalError::kMixedRound;
        break;
      default:
        out.error = ProposalError::kEmptyPosition;
        break;
    }
    return out;
  }
  const Round round = proposal.round();
  if (proposal.creator() != creator_of(round, committee.n)) {
    out.error = ProposalError::kWrongCreator;
    return out;
  }
  for (const auto& p : proposal.permits) {
    if (p.issuer().index >= committee.n || !p.verify(*committee.verifier)) {
      out.error = ProposalError::kBadSignature;
      return out;
    }
  }
  auto payload = Proposal::signing_digest(proposal.position, proposal.permits);
  if (!committee.verifier->verify(proposal.creator(), payload, proposal.signature)) {
    out.error = ProposalError::kBadSignature;
    return out;
  }
  std::set<BlockId> missing;
  std::vector<Position> positions;
  positions.reserve(proposal.permits.size());
  for (const auto& p : proposal.permits) {
    for (const auto& id : p.position.blocks()) {
      if (!dag.contains(id)) missing.insert(id);
    }
    positions.push_back(p.position);
  }
  for (const auto& id : proposal.position.blocks()) {
    if (!dag.contains(id)) missing.insert(id);
  }
  if (!missing.empty()) {
    out.error = ProposalError::kUnknownBlock;
    out.missing.assign(missing.begin(), missing.end());
    return out;
  }
  if (minimal_position(dag, positions) != proposal.position) {
    out.error = ProposalError::kNotMinimal;
    return out;
  }
  out.round = round;
  out.position = proposal.position;
  return out;
}

// ---------------------------------------------------------------------------

bool PendingPool::add(const Block& block, std::span<const BlockId> missing) {
  if (!blocks_.emplace(block.id(), block).second) return false;
  for (const auto& id : missing) waiting_on_[id].insert(block.id());
  return true;
}

std::vector<Block> PendingPool::release(const BlockId& inserted, const BlockDag& dag) {
  std::vector<Block> ready;
  auto it = waiting_on_.find(inserted);
  if (it == waiting_on_.end()) return ready;
  auto candidates = std::move(it->second);
  waiting_on_.erase(it);
  for (const auto& id : candidates) {
    auto b = blocks_.find(id);
    if (b == blocks_.end()) continue;
    if (!dag.missing_parents(b->second).empty()) continue;
    ready.push_back(b->second);
    blocks_.erase(b);
  }
  return ready;
}

std::optional<Block> PendingPool::find(const BlockId& id) const {
  auto it = blocks_.find(id);
  if (it == blocks_.end()) return std::nullopt;
  return it->second;
}

std::string export_dag(const BlockDag& dag) {
  std::ostringstream out;
  for (std::size_t i = 0; i < dag.size(); ++i) {
    const auto& b = dag.block_at(i);
    out << b.id().digest.hex();
    for (const auto& p : b.position().blocks()) out << ' ' << p.digest.hex();
    out << ' ' << b.round().value << ' ';
    if (b.is_genesis()) {
      out << '-';
    } else {
      out << b.creator().index;
    }
    out << ' ' << dag.depth_at(i) << ' ' << (dag.committed_at(i) ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace permitbft
