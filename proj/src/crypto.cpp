#include "permitbft/crypto.hpp"

#include <stdexcept>

#include "permitbft/encoding.hpp"

namespace permitbft {

namespace {

Digest keyed_tag(const Digest& secret, const Digest& payload) {
  Encoder enc;
  enc.put_digest(secret);
  enc.put_digest(payload);
  return enc.digest();
}

class SimulatedSigner final : public Signer {
 public:
  SimulatedSigner(NodeId id, Digest secret) : id_(id), secret_(secret) {}

  NodeId id() const override { return id_; }
  Signature sign(const Digest& payload) const override {
    return Signature{id_, payload, keyed_tag(secret_, payload)};
  }

 private:
  NodeId id_;
  Digest secret_;
};

}  // namespace

SimulatedKeyRing::SimulatedKeyRing(std::uint32_t n, std::uint64_t key_seed) {
  secrets_.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    Encoder enc;
    enc.put_string("permitbft-sim-key");
    enc.put_u64(key_seed);
    enc.put_u32(i);
    secrets_.push_back(enc.digest());
  }
}

std::shared_ptr<SimulatedKeyRing> SimulatedKeyRing::create(std::uint32_t n, std::uint64_t key_seed) {
  return std::shared_ptr<SimulatedKeyRing>(new SimulatedKeyRing(n, key_seed));
}

std::shared_ptr<const Signer> SimulatedKeyRing::signer_for(NodeId node) const {
  if (node.index >= secrets_.size()) throw std::out_of_range("signer_for: unknown node");
  return std::make_shared<SimulatedSigner>(node, secrets_[node.index]);
}

bool SimulatedKeyRing::verify(NodeId signer, const Digest& payload, const Signature& sig) const {
  if (signer.index >= secrets_.size()) return false;
  if (sig.signer != signer || sig.payload_digest != payload) return false;
  return sig.tag == keyed_tag(secrets_[signer.index], payload);
}

}  // namespace permitbft
