#include "permitbft/types.hpp"

#include <algorithm>

namespace permitbft {

namespace {

template <typename T, typename Less>
std::vector<T> sorted_copy(std::span<const T> items, Less less) {
  std::vector<T> out(items.begin(), items.end());
  std::sort(out.begin(), out.end(), less);
  return out;
}

bool timeout_less(const TimeoutMsg& a, const TimeoutMsg& b) {
  if (a.issuer() != b.issuer()) return a.issuer() < b.issuer();
  return a < b;
}

}  // namespace

// ---------------------------------------------------------------------------

Position::Position(std::vector<BlockId> blocks) : blocks_(std::move(blocks)) {
  std::sort(blocks_.begin(), blocks_.end());
  blocks_.erase(std::unique(blocks_.begin(), blocks_.end()), blocks_.end());
}

bool Position::contains(const BlockId& id) const {
  return std::binary_search(blocks_.begin(), blocks_.end(), id);
}

std::string Position::str() const {
  std::string out = "{";
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (i > 0) out += ",";
    out += blocks_[i].str();
  }
  return out + "}";
}

// ---------------------------------------------------------------------------

Transaction::Transaction(std::vector<OutputRef> inputs, std::vector<TxOutput> outputs, std::uint64_t nonce)
    : inputs_(std::move(inputs)), outputs_(std::move(outputs)), nonce_(nonce) {
  std::sort(inputs_.begin(), inputs_.end());
  inputs_.erase(std::unique(inputs_.begin(), inputs_.end()), inputs_.end());
  Encoder enc;
  encode(enc, *this);
  id_ = TxId{enc.digest()};
}

Transaction Transaction::mint(std::string owner, std::uint64_t amount, std::uint64_t nonce) {
  return Transaction({}, {TxOutput{std::move(owner), amount}}, nonce);
}

std::uint64_t Transaction::output_total() const {
  std::uint64_t total = 0;
  for (const auto& out : outputs_) total += out.amount;
  return total;
}

bool conflicts(const Transaction& a, const Transaction& b) {
  if (a.id() == b.id()) return false;
  auto ia = a.inputs();
  auto ib = b.inputs();
  // Both input lists are sorted.
  std::size_t i = 0, j = 0;
  while (i < ia.size() && j < ib.size()) {
    if (ia[i] == ib[j]) return true;
    if (ia[i] < ib[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------

Digest Permit::signing_digest(Round round, const Position& position) {
  Encoder enc;
  enc.put_tag(TypeTag::kPermitPayload);
  enc.put_u64(round.value);
  encode(enc, position);
  return enc.digest();
}

Permit Permit::issue(Round round, Position position, const Signer& signer) {
  auto payload = signing_digest(round, position);
  return Permit{round, std::move(position), signer.sign(payload)};
}

bool Permit::verify(const SignatureVerifier& verifier) const {
  return verifier.verify(signature.signer, signing_digest(round, position), signature);
}

bool permit_less(const Permit& a, const Permit& b) {
  if (a.issuer() != b.issuer()) return a.issuer() < b.issuer();
  return a < b;
}

// ---------------------------------------------------------------------------

Digest Block::signing_digest(const Proof& proof, std::span<const Transaction> txs) {
  Encoder enc;
  enc.put_tag(TypeTag::kBlockPayload);
  encode(enc, proof);
  enc.put_u32(static_cast<std::uint32_t>(txs.size()));
  for (const auto& tx : txs) encode(enc, tx);
  return enc.digest();
}

Block Block::seal(Data data) {
  std::sort(data.proof.permits.begin(), data.proof.permits.end(), permit_less);
  auto shared = std::make_shared<Data>(std::move(data));
  Block block(shared);
  Encoder enc;
  encode(enc, block);
  shared->id = BlockId{enc.digest()};
  return block;
}

Block Block::create(Proof proof, std::vector<Transaction> txs, const Signer& creator) {
  std::sort(proof.permits.begin(), proof.permits.end(), permit_less);
  auto sig = creator.sign(signing_digest(proof, txs));
  return seal(Data{0, std::move(proof), std::move(txs), sig, {}});
}

Block Block::from_parts(Proof proof, std::vector<Transaction> txs, Signature signature) {
  return seal(Data{0, std::move(proof), std::move(txs), signature, {}});
}

Block Block::genesis(std::uint32_t committee_size, std::vector<Transaction> mints) {
  return seal(Data{committee_size == 0 ? 1u : committee_size, Proof{}, std::move(mints), Signature{}, {}});
}

Round Block::round() const {
  const auto& permits = data_->proof.permits;
  return permits.empty() ? Round{} : permits.front().round;
}

const Position& Block::position() const {
  static const Position kNone;
  const auto& permits = data_->proof.permits;
  return permits.empty() ? kNone : permits.front().position;
}

// ---------------------------------------------------------------------------

Digest Proposal::signing_digest(const Position& position, std::span<const Permit> permits) {
  Encoder enc;
  enc.put_tag(TypeTag::kProposalPayload);
  encode(enc, position);
  auto sorted = sorted_copy(permits, permit_less);
  enc.put_u32(static_cast<std::uint32_t>(sorted.size()));
  for (const auto& p : sorted) encode(enc, p);
  return enc.digest();
}

Proposal Proposal::issue(Position position, std::vector<Permit> permits, const Signer& creator) {
  std::sort(permits.begin(), permits.end(), permit_less);
  auto sig = creator.sign(signing_digest(position, permits));
  return Proposal{std::move(position), std::move(permits), sig};
}

Digest TimeoutMsg::signing_digest(Round round) {
  Encoder enc;
  enc.put_tag(TypeTag::kTimeoutPayload);
  enc.put_u64(round.value);
  return enc.digest();
}

TimeoutMsg TimeoutMsg::issue(Round round, const Signer& signer) {
  return TimeoutMsg{round, signer.sign(signing_digest(round))};
}

bool TimeoutMsg::verify(const SignatureVerifier& verifier) const {
  return verifier.verify(signature.signer, signing_digest(round), signature);
}

// ---------------------------------------------------------------------------

std::string_view kind_name(const Message& msg) {
  struct Visitor {
    std::string_view operator()(const Permit&) const { return "permit"; }
    std::string_view operator()(const Block&) const { return "block"; }
    std::string_view operator()(const Proposal&) const { return "proposal"; }
    std::string_view operator()(const TimeoutMsg&) const { return "timeout"; }
    std::string_view operator()(const TimeoutBundle&) const { return "timeout_bundle"; }
    std::string_view operator()(const FetchRequest&) const { return "fetch_request"; }
    std::string_view operator()(const FetchResponse&) const { return "fetch_response"; }
  };
  return std::visit(Visitor{}, msg);
}

std::optional<Round> round_of(const Message& msg) {
  struct Visitor {
    std::optional<Round> operator()(const Permit& m) const { return m.round; }
    std::optional<Round> operator()(const Block& m) const { return m.round(); }
    std::optional<Round> operator()(const Proposal& m) const { return m.round(); }
    std::optional<Round> operator()(const TimeoutMsg& m) const { return m.round; }
    std::optional<Round> operator()(const TimeoutBundle& m) const { return m.round; }
    std::optional<Round> operator()(const FetchRequest&) const { return std::nullopt; }
    std::optional<Round> operator()(const FetchResponse&) const { return std::nullopt; }
  };
  return std::visit(Visitor{}, msg);
}

// ---------------------------------------------------------------------------

void encode(Encoder& enc, const Signature& sig) {
  enc.put_tag(TypeTag::kSignature);
  enc.put_u32(sig.signer.index);
  enc.put_digest(sig.payload_digest);
  enc.put_digest(sig.tag);
}

void encode(Encoder& enc, const Position& pos) {
  enc.put_tag(TypeTag::kPosition);
  enc.put_u32(static_cast<std::uint32_t>(pos.size()));
  for (const auto& id : pos.blocks()) enc.put_digest(id.digest);
}

void encode(Encoder& enc, const OutputRef& ref) {
  enc.put_digest(ref.tx.digest);
  enc.put_u32(ref.index);
}

void encode(Encoder& enc, const Transaction& tx) {
  enc.put_tag(TypeTag::kTransaction);
  enc.put_u32(static_cast<std::uint32_t>(tx.inputs().size()));
  for (const auto& in : tx.inputs()) encode(enc, in);
  enc.put_u32(static_cast<std::uint32_t>(tx.outputs().size()));
  for (const auto& out : tx.outputs()) {
    enc.put_string(out.owner);
    enc.put_u64(out.amount);
  }
  enc.put_u64(tx.nonce());
}

void encode(Encoder& enc, const Permit& permit) {
  enc.put_tag(TypeTag::kPermit);
  enc.put_u64(permit.round.value);
  encode(enc, permit.position);
  encode(enc, permit.signature);
}

void encode(Encoder& enc, const Proof& proof) {
  enc.put_tag(TypeTag::kProof);
  auto sorted = sorted_copy(std::span<const Permit>(proof.permits), permit_less);
  enc.put_u32(static_cast<std::uint32_t>(sorted.size()));
  for (const auto& p : sorted) encode(enc, p);
}

void encode(Encoder& enc, const Block& block) {
  enc.put_tag(TypeTag::kBlock);
  enc.put_u32(block.is_genesis() ? block.committee_size() : 0);
  encode(enc, block.proof());
  enc.put_u32(static_cast<std::uint32_t>(block.transactions().size()));
  for (const auto& tx : block.transactions()) encode(enc, tx);
  encode(enc, block.signature());
}

void encode(Encoder& enc, const Proposal& proposal) {
  enc.put_tag(TypeTag::kProposal);
  encode(enc, proposal.position);
  auto sorted = sorted_copy(std::span<const Permit>(proposal.permits), permit_less);
  enc.put_u32(static_cast<std::uint32_t>(sorted.size()));
  for (const auto& p : sorted) encode(enc, p);
  encode(enc, proposal.signature);
}

void encode(Encoder& enc, const TimeoutMsg& msg) {
  enc.put_tag(TypeTag::kTimeout);
  enc.put_u64(msg.round.value);
  encode(enc, msg.signature);
}

void encode(Encoder& enc, const TimeoutBundle& bundle) {
  enc.put_tag(TypeTag::kTimeoutBundle);
  enc.put_u64(bundle.round.value);
  auto sorted = sorted_copy(std::span<const TimeoutMsg>(bundle.msgs), timeout_less);
  enc.put_u32(static_cast<std::uint32_t>(sorted.size()));
  for (const auto& m : sorted) encode(enc, m);
}

void encode(Encoder& enc, const FetchRequest& req) {
  enc.put_tag(TypeTag::kFetchRequest);
  enc.put_digest(req.block.digest);
}

void encode(Encoder& enc, const FetchResponse& resp) {
  enc.put_tag(TypeTag::kFetchResponse);
  encode(enc, resp.block);
}

void encode(Encoder& enc, const Message& msg) {
  std::visit([&enc](const auto& m) { encode(enc, m); }, msg);
}

// ---------------------------------------------------------------------------

Signature decode_signature(Decoder& dec) {
  dec.expect_tag(TypeTag::kSignature);
  Signature sig;
  sig.signer = NodeId{dec.get_u32()};
  sig.payload_digest = dec.get_digest();
  sig.tag = dec.get_digest();
  return sig;
}

Position decode_position(Decoder& dec) {
  dec.expect_tag(TypeTag::kPosition);
  auto count = dec.get_count(32);
  std::vector<BlockId> ids;
  ids.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) ids.push_back(BlockId{dec.get_digest()});
  return Position(std::move(ids));
}

Transaction decode_transaction(Decoder& dec) {
  dec.expect_tag(TypeTag::kTransaction);
  auto n_in = dec.get_count(36);
  std::vector<OutputRef> inputs;
  inputs.reserve(n_in);
  for (std::uint32_t i = 0; i < n_in; ++i) {
    auto tx = TxId{dec.get_digest()};
    inputs.push_back(OutputRef{tx, dec.get_u32()});
  }
  auto n_out = dec.get_count(12);
  std::vector<TxOutput> outputs;
  outputs.reserve(n_out);
  for (std::uint32_t i = 0; i < n_out; ++i) {
    auto owner = dec.get_string();
    outputs.push_back(TxOutput{std::move(owner), dec.get_u64()});
  }
  auto nonce = dec.get_u64();
  return Transaction(std::move(inputs), std::move(outputs), nonce);
}

Permit decode_permit(Decoder& dec) {
  dec.expect_tag(TypeTag::kPermit);
  Permit p;
  p.round = Round{dec.get_u64()};
  p.position = decode_position(dec);
  p.signature = decode_signature(dec);
  return p;
}

Proof decode_proof(Decoder& dec) {
  dec.expect_tag(TypeTag::kProof);
  auto count = dec.get_count(1);
  Proof proof;
  proof.permits.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) proof.permits.push_back(decode_permit(dec));
  return proof;
}

Block decode_block(Decoder& dec) {
  dec.expect_tag(TypeTag::kBlock);
  auto committee = dec.get_u32();
  auto proof = decode_proof(dec);
  auto n_tx = dec.get_count(1);
  std::vector<Transaction> txs;
  txs.reserve(n_tx);
  for (std::uint32_t i = 0; i < n_tx; ++i) txs.push_back(decode_transaction(dec));
  auto sig = decode_signature(dec);
  if (committee != 0) {
    if (!proof.permits.empty()) throw DecodeError("genesis block with a proof");
    return Block::genesis(committee, std::move(txs));
  }
  return Block::from_parts(std::move(proof), std::move(txs), sig);
}

Proposal decode_proposal(Decoder& dec) {
  dec.expect_tag(TypeTag::kProposal);
  Proposal p;
  p.position = decode_position(dec);
  auto count = dec.get_count(1);
  p.permits.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) p.permits.push_back(decode_permit(dec));
  p.signature = decode_signature(dec);
  return p;
}

TimeoutMsg decode_timeout(Decoder& dec) {
  dec.expect_tag(TypeTag::kTimeout);
  TimeoutMsg m;
  m.round = Round{dec.get_u64()};
  m.signature = decode_signature(dec);
  return m;
}

TimeoutBundle decode_timeout_bundle(Decoder& dec) {
  dec.expect_tag(TypeTag::kTimeoutBundle);
  TimeoutBundle b;
  b.round = Round{dec.get_u64()};
  auto count = dec.get_count(1);
  b.msgs.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) b.msgs.push_back(decode_timeout(dec));
  return b;
}

Message decode_message(Decoder& dec) {
  switch (dec.peek_tag()) {
    case TypeTag::kPermit:
      return decode_permit(dec);
    case TypeTag::kBlock:
      return decode_block(dec);
    case TypeTag::kProposal:
      return decode_proposal(dec);
    case TypeTag::kTimeout:
      return decode_timeout(dec);
    case TypeTag::kTimeoutBundle:
      return decode_timeout_bundle(dec);
    case TypeTag::kFetchRequest: {
      dec.expect_tag(TypeTag::kFetchRequest);
      return FetchRequest{BlockId{dec.get_digest()}};
    }
    case TypeTag::kFetchResponse: {
      dec.expect_tag(TypeTag::kFetchResponse);
      return FetchResponse{decode_block(dec)};
    }
    default:
      throw DecodeError("not a message tag: " + std::to_string(static_cast<int>(dec.peek_tag())));
  }
}

std::vector<std::uint8_t> encode_message(const Message& msg) {
  Encoder enc;
  encode(enc, msg);
  return std::move(enc).bytes();
}

Message decode_message(std::span<const std::uint8_t> bytes) {
  Decoder dec(bytes);
  auto msg = decode_message(dec);
  dec.expect_end();
  return msg;
}

Digest digest_of(const Message& msg) {
  if (const auto* block = std::get_if<Block>(&msg)) return block->id().digest;
  Encoder enc;
  encode(enc, msg);
  return enc.digest();
}

}  // namespace permitbft
