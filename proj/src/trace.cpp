#include "permitbft/trace.hpp"

#include <sstream>
#include <stdexcept>

namespace permitbft {

namespace {

constexpr std::size_t kTail = 64;
constexpr std::string_view kMagic = "# permitbft-trace v1";

Digest parse_hex(const std::string& hex) {
  if (hex.size() != 64) throw std::invalid_argument("bad digest length");
  Digest d;
  for (std::size_t i = 0; i < 32; ++i) d.bytes[i] = static_cast<std::uint8_t>(std::stoul(hex.substr(2 * i, 2), nullptr, 16));
  return d;
}

}  // namespace

std::string header_line(const Digest& scenario, std::uint64_t seed, std::uint32_t n, std::uint32_t f) {
  std::ostringstream out;
  out << kMagic << " scenario=" << scenario.hex() << " seed=" << seed << " n=" << n << " f=" << f;
  return out.str();
}

TraceHeader parse_header(const std::string& line) {
  if (line.rfind(kMagic, 0) != 0) throw std::invalid_argument("not a trace header");
  TraceHeader h;
  std::istringstream in(line.substr(kMagic.size()));
  std::string field;
  while (in >> field) {
    auto eq = field.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("malformed header field " + field);
    auto key = field.substr(0, eq);
    auto value = field.substr(eq + 1);
    if (key == "scenario") {
      h.scenario = parse_hex(value);
    } else if (key == "seed") {
      h.seed = std::stoull(value);
    } else if (key == "n") {
      h.n = static_cast<std::uint32_t>(std::stoul(value));
    } else if (key == "f") {
      h.f = static_cast<std::uint32_t>(std::stoul(value));
    }
  }
  return h;
}

TraceWriter::TraceWriter(bool keep_lines) : keep_(keep_lines) {}

void TraceWriter::push(std::string line) {
  if (done_) return;
  hash_.update(line);
  hash_.update("\n");
  ++count_;
  if (tail_.size() == kTail) tail_.erase(tail_.begin());
  tail_.push_back(line);
  if (keep_) lines_.push_back(std::move(line));
}

void TraceWriter::header(const Digest& scenario, std::uint64_t seed, std::uint32_t n, std::uint32_t f) {
  push(header_line(scenario, seed, n, f));
}

void TraceWriter::record(std::int64_t time, std::uint64_t seq, std::string_view actor, std::string_view kind,
                         const Digest& payload, std::string_view detail) {
  std::string line;
  line.reserve(128);
  line += std::to_string(time);
  line += ' ';
  line += std::to_string(seq);
  line += ' ';
  line += actor;
  line += ' ';
  line += kind;
  line += ' ';
  line += payload.short_hex();
  line += ' ';
  line += detail.empty() ? std::string_view("-") : detail;
  push(std::move(line));
}

Digest TraceWriter::finish() {
  done_ = true;
  return hash_.finish();
}

}  // namespace permitbft
