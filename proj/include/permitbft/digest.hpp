#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace permitbft {

/// 32-byte SHA-256 digest. Ordered bytewise so it can key ordered containers.
struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  auto operator<=>(const Digest&) const = default;

  std::string hex() const;
  /// First 8 bytes as hex; enough to tell blocks apart in logs and traces.
  std::string short_hex() const;
  bool is_zero() const;
};

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view text);

/// Incremental SHA-256 over a byte stream (trace files are hashed as written).
class Sha256Stream {
 public:
  Sha256Stream();
  ~Sha256Stream();
  Sha256Stream(Sha256Stream&&) noexcept;
  Sha256Stream& operator=(Sha256Stream&&) noexcept;
  Sha256Stream(const Sha256Stream&) = delete;
  Sha256Stream& operator=(const Sha256Stream&) = delete;

  void update(std::span<const std::uint8_t> data);
  void update(std::string_view text);
  Digest finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace permitbft
