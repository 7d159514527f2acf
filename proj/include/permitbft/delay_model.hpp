#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <utility>

#include "permitbft/scenario.hpp"

namespace permitbft {

/// Maps a send to its delivery time. Each directed edge draws from its own
/// seeded stream, so adding traffic on one edge never perturbs another.
class DelayModel {
 public:
  DelayModel(const Scenario& scenario, std::uint64_t seed);

  Ticks delivery_time(NodeId from, NodeId to, Ticks send_time);

  bool synchronous_at(Ticks t) const;
  /// Earliest instant >= t that is synchronous.
  Ticks next_synchronous(Ticks t) const;
  /// End of a partition separating the pair at time t, if any.
  std::optional<Ticks> split_until(NodeId a, NodeId b, Ticks t) const;

 private:
  Ticks draw(NodeId from, NodeId to, Ticks lo, Ticks hi);

  Scenario scenario_;
  std::uint64_t seed_;
  std::map<std::pair<NodeId, NodeId>, std::mt19937_64> streams_;
};

}  // namespace permitbft
