#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "permitbft/ids.hpp"

namespace permitbft {

/// Signing capability for exactly one identity. Holding a Signer is the only
/// way to produce signatures that verify under that identity.
class Signer {
 public:
  virtual ~Signer() = default;
  virtual NodeId id() const = 0;
  virtual Signature sign(const Digest& payload) const = 0;
};

class SignatureVerifier {
 public:
  virtual ~SignatureVerifier() = default;
  /// Never throws; mismatches just return false.
  virtual bool verify(NodeId signer, const Digest& payload, const Signature& sig) const = 0;
};

/// Deterministic simulation scheme: the tag is SHA-256(secret_i || payload)
/// with per-node secrets derived from a key seed. Unforgeability is enforced
/// by the simulator handing out signers only for a node's own identity.
class SimulatedKeyRing final : public SignatureVerifier,
                               public std::enable_shared_from_this<SimulatedKeyRing> {
 public:
  static std::shared_ptr<SimulatedKeyRing> create(std::uint32_t n, std::uint64_t key_seed = 0);

  std::uint32_t size() const { return static_cast<std::uint32_t>(secrets_.size()); }
  std::shared_ptr<const Signer> signer_for(NodeId node) const;
  bool verify(NodeId signer, const Digest& payload, const Signature& sig) const override;

 private:
  SimulatedKeyRing(std::uint32_t n, std::uint64_t key_seed);

  std::vector<Digest> secrets_;
};

}  // namespace permitbft
