#include "permitbft/delay_model.hpp"

#include <algorithm>

namespace permitbft {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::size_t group_of(const Partition& p, NodeId id) {
  for (std::size_t g = 0; g < p.groups.size(); ++g) {
    if (std::find(p.groups[g].begin(), p.groups[g].end(), id) != p.groups[g].end()) return g;
  }
  return p.groups.size();
}

}  // namespace

DelayModel::DelayModel(const Scenario& scenario, std::uint64_t seed) : scenario_(scenario), seed_(seed) {}

bool DelayModel::synchronous_at(Ticks t) const {
  for (const auto& p : scenario_.phases) {
    if (p.start <= t && t < p.end) return p.synchronous;
  }
  return true;
}

Ticks DelayModel::next_synchronous(Ticks t) const {
  // Phases may abut, so walk forward through consecutive async phases.
  bool moved = true;
  while (moved && t < scenario_.horizon) {
    moved = false;
    for (const auto& p : scenario_.phases) {
      if (!p.synchronous && p.start <= t && t < p.end) {
        t = p.end;
        moved = true;
      }
    }
  }
  return t;
}

std::optional<Ticks> DelayModel::split_until(NodeId a, NodeId b, Ticks t) const {
  std::optional<Ticks> until;
  for (const auto& p : scenario_.partitions) {
    if (p.start <= t && t < p.end && group_of(p, a) != group_of(p, b)) until = std::max(until.value_or(p.end), p.end);
  }
  return until;
}

Ticks DelayModel::draw(NodeId from, NodeId to, Ticks lo, Ticks hi) {
  auto key = std::make_pair(from, to);
  auto it = streams_.find(key);
  if (it == streams_.end()) {
    const auto s = splitmix64(seed_ ^ splitmix64((std::uint64_t{from.index} << 32) | to.index));
    it = streams_.emplace(key, std::mt19937_64(s)).first;
  }
  // Plain modulo keeps the mapping identical across standard libraries.
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<Ticks>(it->second() % span);
}

Ticks DelayModel::delivery_time(NodeId from, NodeId to, Ticks send_time) {
  const Ticks delta = scenario_.timers.delta;
  Ticks at;
  if (synchronous_at(send_time)) {
    at = send_time + (scenario_.delay_mode == DelayMode::kFixed ? delta : draw(from, to, 1, delta));
  } else {
    at = send_time + draw(from, to, 1, next_synchronous(send_time) - send_time + delta);
  }
  if (auto until = split_until(from, to, send_time); until && at < *until) {
    at = *until + (scenario_.delay_mode == DelayMode::kFixed ? delta : draw(from, to, 1, delta));
  }
  return at;
}

}  // namespace permitbft
