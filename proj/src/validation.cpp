#include "permitbft/validation.hpp"

#include <set>

namespace permitbft {

std::string_view to_string(ProofError err) {
  switch (err) {
    case ProofError::kInsufficientPermits:
      return "insufficient_permits";
    case ProofError::kDuplicateIssuer:
      return "duplicate_issuer";
    case ProofError::kMixedRound:
      return "mixed_round";
    case ProofError::kMixedPosition:
      return "mixed_position";
    case ProofError::kBadSignature:
      return "bad_signature";
    case ProofError::kEmptyPosition:
      return "empty_position";
  }
  return "unknown";
}

std::optional<ProofError> check_permit_quorum(std::span<const Permit> permits, const Committee& committee) {
  if (permits.size() < committee.quorum()) return ProofError::kInsufficientPermits;
  std::set<NodeId> issuers;
  for (const auto& p : permits) {
    if (!issuers.insert(p.issuer()).second) return ProofError::kDuplicateIssuer;
  }
  for (const auto& p : permits) {
    if (p.round != permits.front().round) return ProofError::kMixedRound;
  }
  for (const auto& p : permits) {
    if (p.position.empty()) return ProofError::kEmptyPosition;
  }
  return std::nullopt;
}

ProofCheck validate_proof(const Proof& proof, const Committee& committee) {
  ProofCheck out;
  if (auto err = check_permit_quorum(proof.permits, committee)) {
    out.error = err;
    return out;
  }
  for (const auto& p : proof.permits) {
    if (p.position != proof.permits.front().position) {
      out.error = ProofError::kMixedPosition;
      return out;
    }
  }
  for (const auto& p : proof.permits) {
    if (p.issuer().index >= committee.n || !p.verify(*committee.verifier)) {
      out.error = ProofError::kBadSignature;
      return out;
    }
  }
  out.round = proof.permits.front().round;
  out.position = proof.permits.front().position;
  return out;
}

bool validate_timeout_bundle(const TimeoutBundle& bundle, const Committee& committee) {
  std::set<NodeId> issuers;
  for (const auto& m : bundle.msgs) {
    if (m.round != bundle.round) return false;
    if (m.issuer().index >= committee.n || !m.verify(*committee.verifier)) return false;
    issuers.insert(m.issuer());
  }
  return issuers.size() >= committee.quorum();
}

}  // namespace permitbft
