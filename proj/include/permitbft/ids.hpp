#pragma once

#include <compare>
#include <cstdint>
#include <string>

#include "permitbft/digest.hpp"

namespace permitbft {

/// Virtual simulation time. One message delay bound is a configurable number
/// of ticks (1000 by default).
using Ticks = std::int64_t;

struct NodeId {
  std::uint32_t index = 0;

  auto operator<=>(const NodeId&) const = default;
  std::string str() const { return "node" + std::to_string(index); }
};

struct Round {
  std::uint64_t value = 0;

  auto operator<=>(const Round&) const = default;
  Round next() const { return Round{value + 1}; }
};

/// Round-robin block creator: round mod n.
inline NodeId creator_of(Round round, std::uint32_t n) {
  return NodeId{static_cast<std::uint32_t>(round.value % n)};
}

struct BlockId {
  Digest digest;

  auto operator<=>(const BlockId&) const = default;
  std::string str() const { return digest.short_hex(); }
};

struct TxId {
  Digest digest;

  auto operator<=>(const TxId&) const = default;
  std::string str() const { return digest.short_hex(); }
};

struct Signature {
  NodeId signer;
  Digest payload_digest;
  // Scheme-specific authenticator. The simulation scheme stores a keyed hash.
  Digest tag;

  auto operator<=>(const Signature&) const = default;
};

}  // namespace permitbft
