#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "permitbft/simulator.hpp"

namespace permitbft {

struct LivenessReport {
  bool ok = true;
  std::vector<std::string> failures;
  /// Honest round at the start of the checked synchronous phase.
  Round start_round;
  /// Round of the earliest child committing a non-genesis block.
  std::optional<Round> first_commit_round;
  std::optional<std::uint64_t> rounds_to_commit;
  std::uint64_t window = 0;  // allowed rounds: (n + 2) + 3
  std::uint64_t unification_checked = 0;
  std::uint64_t unification_failed = 0;
  std::uint64_t progress_checked = 0;
  std::uint64_t progress_failed = 0;
};

/// Needs a synchronous phase of at least (n + 2) round timeouts. Checks the
/// first commit falls inside the window and is held by every honest node,
/// that rounds after an honest creator are entered by all honest nodes
/// within one delay of the first, and that honest creators of such rounds
/// produce a block or proposal.
LivenessReport check_liveness(const Scenario& scenario, const RunResult& run);

/// True iff rounds [start, start + n + 2) contain three consecutive honest
/// creators under round-robin assignment.
bool has_honest_triple(const std::vector<bool>& byzantine, std::uint64_t start);

struct PlacementSweep {
  std::uint32_t n = 0;
  std::uint32_t f = 0;
  std::uint64_t placements = 0;
  std::uint64_t passed = 0;
};

/// Every placement of f = (n - 1) / 3 byzantine creators on the circle and
/// every window start.
PlacementSweep sweep_creator_placements(std::uint32_t n);

}  // namespace permitbft
