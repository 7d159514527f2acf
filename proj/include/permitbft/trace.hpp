#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "permitbft/digest.hpp"

namespace permitbft {

/// Newline-delimited event log: a header line, then one
/// `timestamp seq actor kind payload_digest detail` record per line.
/// The digest always covers every line; keeping the text is optional.
class TraceWriter {
 public:
  explicit TraceWriter(bool keep_lines);

  void header(const Digest& scenario, std::uint64_t seed, std::uint32_t n, std::uint32_t f);
  void record(std::int64_t time, std::uint64_t seq, std::string_view actor, std::string_view kind,
              const Digest& payload, std::string_view detail);

  /// Finalizes the stream; further records are ignored.
  Digest finish();
  const std::vector<std::string>& lines() const { return lines_; }
  std::uint64_t count() const { return count_; }
  /// Last lines written, available even when lines are not kept.
  const std::vector<std::string>& tail() const { return tail_; }

 private:
  void push(std::string line);

  bool keep_;
  bool done_ = false;
  Sha256Stream hash_;
  std::vector<std::string> lines_;
  std::vector<std::string> tail_;
  std::uint64_t count_ = 0;
};

std::string header_line(const Digest& scenario, std::uint64_t seed, std::uint32_t n, std::uint32_t f);

/// Parsed run header.
struct TraceHeader {
  Digest scenario;
  std::uint64_t seed = 0;
  std::uint32_t n = 0;
  std::uint32_t f = 0;
};

/// Throws std::invalid_argument if `line` is not a header line.
TraceHeader parse_header(const std::string& line);

}  // namespace permitbft
