#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "permitbft/crypto.hpp"
#include "permitbft/encoding.hpp"
#include "permitbft/ids.hpp"

namespace permitbft {

/// A set of blocks: the attachment point for the next block. Stored sorted and
/// deduplicated so equal sets compare and encode identically.
class Position {
 public:
  Position() = default;
  explicit Position(std::vector<BlockId> blocks);
  static Position of(BlockId id) { return Position(std::vector<BlockId>{id}); }

  std::span<const BlockId> blocks() const { return blocks_; }
  std::size_t size() const { return blocks_.size(); }
  bool empty() const { return blocks_.empty(); }
  bool contains(const BlockId& id) const;
  std::string str() const;

  auto operator<=>(const Position&) const = default;

 private:
  std::vector<BlockId> blocks_;
};

// ---------------------------------------------------------------------------
// UTXO transactions
// ---------------------------------------------------------------------------

struct OutputRef {
  TxId tx;
  std::uint32_t index = 0;

  auto operator<=>(const OutputRef&) const = default;
  std::string str() const { return tx.str() + ":" + std::to_string(index); }
};

struct TxOutput {
  std::string owner;  // node id or client tag
  std::uint64_t amount = 0;

  auto operator<=>(const TxOutput&) const = default;
};

/// Immutable UTXO transaction; its id is the digest of its canonical encoding.
/// Inputs may only be empty for coinbase (mint) transactions.
class Transaction {
 public:
  Transaction(std::vector<OutputRef> inputs, std::vector<TxOutput> outputs, std::uint64_t nonce = 0);

  static Transaction mint(std::string owner, std::uint64_t amount, std::uint64_t nonce);

  const TxId& id() const { return id_; }
  std::span<const OutputRef> inputs() const { return inputs_; }
  std::span<const TxOutput> outputs() const { return outputs_; }
  std::uint64_t nonce() const { return nonce_; }
  bool is_coinbase() const { return inputs_.empty(); }
  std::uint64_t output_total() const;

  bool operator==(const Transaction& o) const { return id_ == o.id_; }

 private:
  std::vector<OutputRef> inputs_;
  std::vector<TxOutput> outputs_;
  std::uint64_t nonce_ = 0;
  TxId id_;
};

/// Two distinct transactions conflict iff they spend a common output.
bool conflicts(const Transaction& a, const Transaction& b);

// ---------------------------------------------------------------------------
// Protocol messages
// ---------------------------------------------------------------------------

/// Signed endorsement of the round's creator appending at `position`.
struct Permit {
  Round round;
  Position position;
  Signature signature;

  static Permit issue(Round round, Position position, const Signer& signer);
  static Digest signing_digest(Round round, const Position& position);

  NodeId issuer() const { return signature.signer; }
  bool verify(const SignatureVerifier& verifier) const;

  auto operator<=>(const Permit&) const = default;
};

/// Canonical permit order inside proofs and proposals: issuer first.
bool permit_less(const Permit& a, const Permit& b);

/// Quorum of permits authorizing a block. Validation lives in validation.hpp.
struct Proof {
  std::vector<Permit> permits;

  auto operator<=>(const Proof&) const = default;
};

/// A block: (proof, transactions) signed by the creator designated by the
/// proof's round. Genesis has an empty proof and records the committee size.
/// Copies share the immutable payload.
class Block {
 public:
  static Block create(Proof proof, std::vector<Transaction> txs, const Signer& creator);
  static Block from_parts(Proof proof, std::vector<Transaction> txs, Signature signature);
  static Block genesis(std::uint32_t committee_size, std::vector<Transaction> mints);
  static Digest signing_digest(const Proof& proof, std::span<const Transaction> txs);

  const BlockId& id() const { return data_->id; }
  const Proof& proof() const { return data_->proof; }
  std::span<const Transaction> transactions() const { return data_->txs; }
  const Signature& signature() const { return data_->signature; }
  bool is_genesis() const { return data_->committee_size != 0; }
  std::uint32_t committee_size() const { return data_->committee_size; }

  /// Round and position of the first permit; validation guarantees they are
  /// shared by all permits. Genesis reports round 0 and no parents.
  Round round() const;
  const Position& position() const;
  NodeId creator() const { return data_->signature.signer; }

  bool operator==(const Block& o) const { return id() == o.id(); }

 private:
  struct Data {
    std::uint32_t committee_size = 0;
    Proof proof;
    std::vector<Transaction> txs;
    Signature signature;
    BlockId id;
  };
  explicit Block(std::shared_ptr<const Data> data) : data_(std::move(data)) {}
  static Block seal(Data data);

  std::shared_ptr<const Data> data_;
};

/// Certificate of disagreement: the minimal position respecting all permits,
/// signed by the round's creator.
struct Proposal {
  Position position;
  std::vector<Permit> permits;
  Signature signature;

  static Proposal issue(Position position, std::vector<Permit> permits, const Signer& creator);
  static Digest signing_digest(const Position& position, std::span<const Permit> permits);

  Round round() const { return permits.empty() ? Round{} : permits.front().round; }
  NodeId creator() const { return signature.signer; }

  auto operator<=>(const Proposal&) const = default;
};

struct TimeoutMsg {
  Round round;
  Signature signature;

  static TimeoutMsg issue(Round round, const Signer& signer);
  static Digest signing_digest(Round round);

  NodeId issuer() const { return signature.signer; }
  bool verify(const SignatureVerifier& verifier) const;

  auto operator<=>(const TimeoutMsg&) const = default;
};

/// 2f+1 timeout messages for one round, relayed as a unit.
struct TimeoutBundle {
  Round round;
  std::vector<TimeoutMsg> msgs;

  auto operator<=>(const TimeoutBundle&) const = default;
};

struct FetchRequest {
  BlockId block;
  auto operator<=>(const FetchRequest&) const = default;
};

struct FetchResponse {
  Block block;
  bool operator==(const FetchResponse& o) const { return block == o.block; }
};

using Message = std::variant<Permit, Block, Proposal, TimeoutMsg, TimeoutBundle, FetchRequest, FetchResponse>;

std::string_view kind_name(const Message& msg);
/// Protocol round a message belongs to; fetch traffic has none.
std::optional<Round> round_of(const Message& msg);

// ---------------------------------------------------------------------------
// Canonical encoding: tag byte, little-endian fixed-width fields, u32
// length-prefixed collections sorted canonically.
// ---------------------------------------------------------------------------

void encode(Encoder& enc, const Signature& sig);
void encode(Encoder& enc, const Position& pos);
void encode(Encoder& enc, const OutputRef& ref);
void encode(Encoder& enc, const Transaction& tx);
void encode(Encoder& enc, const Permit& permit);
void encode(Encoder& enc, const Proof& proof);
void encode(Encoder& enc, const Block& block);
void encode(Encoder& enc, const Proposal& proposal);
void encode(Encoder& enc, const TimeoutMsg& msg);
void encode(Encoder& enc, const TimeoutBundle& bundle);
void encode(Encoder& enc, const FetchRequest& req);
void encode(Encoder& enc, const FetchResponse& resp);
void encode(Encoder& enc, const Message& msg);

Signature decode_signature(Decoder& dec);
Position decode_position(Decoder& dec);
Transaction decode_transaction(Decoder& dec);
Permit decode_permit(Decoder& dec);
Proof decode_proof(Decoder& dec);
Block decode_block(Decoder& dec);
Proposal decode_proposal(Decoder& dec);
TimeoutMsg decode_timeout(Decoder& dec);
TimeoutBundle decode_timeout_bundle(Decoder& dec);
Message decode_message(Decoder& dec);

std::vector<std::uint8_t> encode_message(const Message& msg);
Message decode_message(std::span<const std::uint8_t> bytes);
Digest digest_of(const Message& msg);

}  // namespace permitbft
