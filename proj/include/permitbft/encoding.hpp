#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "permitbft/digest.hpp"

namespace permitbft {

/// Type tags leading every canonical encoding.
enum class TypeTag : std::uint8_t {
  kPosition = 1,
  kPermit = 2,
  kProof = 3,
  kBlock = 4,
  kProposal = 5,
  kTimeout = 6,
  kTimeoutBundle = 7,
  kTransaction = 8,
  kFetchRequest = 9,
  kFetchResponse = 10,
  kSignature = 11,
  // Signing payloads are tagged separately so a signature over one kind of
  // message never verifies as another.
  kPermitPayload = 32,
  kBlockPayload = 33,
  kProposalPayload = 34,
  kTimeoutPayload = 35,
};

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Little-endian fixed-width writer. Collections are written by callers as a
/// u32 length followed by the (already sorted) elements.
class Encoder {
 public:
  void put_tag(TypeTag tag) { put_u8(static_cast<std::uint8_t>(tag)); }
  void put_u8(std::uint8_t v) { out_.push_back(v); }
  void put_u32(std::uint32_t v);
  void put_u64(std::uint64_t v);
  void put_digest(const Digest& d);
  void put_string(std::string_view s);

  const std::vector<std::uint8_t>& bytes() const& { return out_; }
  std::vector<std::uint8_t> bytes() && { return std::move(out_); }
  Digest digest() const { return sha256(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Decoder {
 public:
  explicit Decoder(std::span<const std::uint8_t> in) : in_(in) {}

  void expect_tag(TypeTag tag);
  TypeTag peek_tag() const;
  std::uint8_t get_u8();
  std::uint32_t get_u32();
  std::uint64_t get_u64();
  Digest get_digest();
  std::string get_string();
  /// Length prefix of a collection, bounded by the bytes left so a corrupt
  /// prefix cannot request a huge allocation.
  std::uint32_t get_count(std::size_t min_element_size);

  bool at_end() const { return pos_ == in_.size(); }
  void expect_end() const;

 private:
  void need(std::size_t n) const;

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace permitbft
