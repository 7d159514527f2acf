#include "permitbft/encoding.hpp"

namespace permitbft {

void Encoder::put_u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void Encoder::put_u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void Encoder::put_digest(const Digest& d) { out_.insert(out_.end(), d.bytes.begin(), d.bytes.end()); }

void Encoder::put_string(std::string_view s) {
  put_u32(static_cast<std::uint32_t>(s.size()));
  out_.insert(out_.end(), s.begin(), s.end());
}

void Decoder::need(std::size_t n) const {
  if (in_.size() - pos_ < n) throw DecodeError("truncated input");
}

void Decoder::expect_tag(TypeTag tag) {
  auto got = get_u8();
  if (got != static_cast<std::uint8_t>(tag)) {
    throw DecodeError("unexpected type tag " + std::to_string(got) + ", wanted " +
                      std::to_string(static_cast<int>(tag)));
  }
}

TypeTag Decoder::peek_tag() const {
  need(1);
  return static_cast<TypeTag>(in_[pos_]);
}

std::uint8_t Decoder::get_u8() {
  need(1);
  return in_[pos_++];
}

std::uint32_t Decoder::get_u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
  return v;
}

std::uint64_t Decoder::get_u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
  return v;
}

Digest Decoder::get_digest() {
  need(32);
  Digest d;
  for (auto& b : d.bytes) b = in_[pos_++];
  return d;
}

std::string Decoder::get_string() {
  auto len = get_u32();
  need(len);
  std::string s(reinterpret_cast<const char*>(in_.data() + pos_), len);
  pos_ += len;
  return s;
}

std::uint32_t Decoder::get_count(std::size_t min_element_size) {
  auto count = get_u32();
  if (min_element_size > 0 && count > (in_.size() - pos_) / min_element_size) {
    throw DecodeError("collection length exceeds input");
  }
  return count;
}

void Decoder::expect_end() const {
  if (!at_end()) throw DecodeError("trailing bytes after message");
}

}  // namespace permitbft
