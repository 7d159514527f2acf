#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>

#include "permitbft/crypto.hpp"
#include "permitbft/types.hpp"

namespace permitbft {

/// Static membership: n nodes tolerating f byzantine ones, plus the verifier
/// for everyone's signatures.
struct Committee {
  std::uint32_t n = 4;
  std::uint32_t f = 1;
  std::shared_ptr<const SignatureVerifier> verifier;

  std::uint32_t quorum() const { return 2 * f + 1; }
};

enum class ProofError {
  kInsufficientPermits,
  kDuplicateIssuer,
  kMixedRound,
  kMixedPosition,
  kBadSignature,
  kEmptyPosition,
};

std::string_view to_string(ProofError err);

struct ProofCheck {
  std::optional<ProofError> error;
  Round round;
  Position position;

  bool ok() const { return !error.has_value(); }
};

/// Accepts iff there are at least 2f+1 permits, issuers are pairwise distinct,
/// every permit names the same round and position, and all signatures verify.
/// Returns the common (round, position) on success.
ProofCheck validate_proof(const Proof& proof, const Committee& committee);

/// Cardinality/distinctness/signature checks shared by proofs and proposals,
/// minus the uniform-position requirement.
std::optional<ProofError> check_permit_quorum(std::span<const Permit> permits, const Committee& committee);

/// 2f+1 distinct valid timeouts, all for bundle.round.
bool validate_timeout_bundle(const TimeoutBundle& bundle, const Committee& committee);

}  // namespace permitbft
