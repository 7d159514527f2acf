#include "permitbft/liveness.hpp"

#include <algorithm>
#include <map>

#include "permitbft/delay_model.hpp"

namespace permitbft {

namespace {

struct Window {
  Ticks start;
  Ticks end;
};

// Maximal synchronous, partition-free stretches inside the horizon.
std::vector<Window> quiet_windows(const Scenario& s) {
  std::vector<Ticks> cuts{0, s.horizon};
  for (const auto& p : s.phases) {
    cuts.push_back(p.start);
    cuts.push_back(p.end);
  }
  for (const auto& p : s.partitions) {
    cuts.push_back(p.start);
    cuts.push_back(p.end);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  DelayModel model(s, 0);
  std::vector<Window> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const Ticks a = cuts[i];
    const Ticks b = cuts[i + 1];
    if (a >= s.horizon) break;
    bool quiet = model.synchronous_at(a);
    for (const auto& p : s.partitions) {
      if (p.start <= a && a < p.end) quiet = false;
    }
    if (!quiet) continue;
    if (!out.empty() && out.back().end == a) {
      out.back().end = b;
    } else {
      out.push_back({a, b});
    }
  }
  return out;
}

}  // namespace

LivenessReport check_liveness(const Scenario& s, const RunResult& run) {
  LivenessReport rep;
  rep.window = (s.n + 2) + 3;
  const Ticks need = static_cast<Ticks>(s.n + 2) * s.timers.round_timeout;
  const auto windows = quiet_windows(s);
  auto phase = std::find_if(windows.begin(), windows.end(), [&](const Window& w) { return w.end - w.start >= need; });
  if (phase == windows.end()) {
    rep.ok = false;
    rep.failures.push_back("no synchronous phase of " + std::to_string(need) + " ticks");
    return rep;
  }

  // Round of every honest node over time, and T_i per round.
  std::map<NodeId, std::vector<std::pair<Ticks, Round>>> per_node;
  std::map<Round, Ticks> started;
  Round rmax;
  bool any = false;
  for (const auto& e : run.rounds) {
    per_node[e.node].emplace_back(e.at, e.round);
    if (!any || e.round > rmax) {
      for (std::uint64_t r = any ? rmax.value + 1 : 0; r <= e.round.value; ++r) started.emplace(Round{r}, e.at);
      rmax = e.round;
      any = true;
    }
  }
  auto round_at = [&](NodeId u, Ticks t) -> std::optional<Round> {
    std::optional<Round> r;
    for (const auto& [at, round] : per_node[u]) {
      if (at > t) break;
      r = round;
    }
    return r;
  };
  std::vector<NodeId> honest;
  for (std::uint32_t i = 0; i < s.n; ++i) {
    if (s.is_honest(NodeId{i})) honest.push_back(NodeId{i});
  }
  for (const auto& e : run.rounds) {
    if (e.at <= phase->start) rep.start_round = std::max(rep.start_round, e.round);
  }

  // First commit of a non-genesis block.
  const auto& dag = run.oracle->dag();
  std::optional<std::pair<Round, BlockId>> first;
  for (std::size_t i = 1; i < dag.size(); ++i) {
    const auto& b = dag.block_at(i);
    if (b.round() < rep.start_round) continue;
    for (const auto& parent : b.position().blocks()) {
      if (parent == dag.genesis().id()) continue;
      if (!first || b.round() < first->first) first = std::make_pair(b.round(), b.id());
    }
  }
  if (!first) {
    rep.ok = false;
    rep.failures.push_back("no non-genesis block was committed");
  } else {
    rep.first_commit_round = first->first;
    rep.rounds_to_commit = first->first.value - rep.start_round.value + 1;
    if (*rep.rounds_to_commit > rep.window) {
      rep.ok = false;
      rep.failures.push_back("first commit in round " + std::to_string(first->first.value) + ", " +
                             std::to_string(*rep.rounds_to_commit) + " rounds after phase start");
    }
    for (const auto& u : honest) {
      auto it = run.honest_blocks.find(u);
      if (it == run.honest_blocks.end() || !it->second.count(first->second)) {
        rep.ok = false;
        rep.failures.push_back(u.str() + " never stored the committing block");
      }
    }
  }

  // Rounds must lie wholly inside the synchronous phase. A phase that opens
  // after asynchrony gets n round timeouts for nodes to catch up.
  const Ticks from = phase->start + (phase->start == 0 ? 0 : static_cast<Ticks>(s.n) * s.timers.round_timeout);
  const Ticks delta = s.timers.delta;
  for (const auto& [round, t_i] : started) {
    if (t_i < from) continue;
    const NodeId creator = creator_of(round, s.n);
    if (!s.is_honest(creator)) continue;

    auto next = started.find(round.next());
    if (next != started.end() && next->second + delta <= phase->end && next->second + delta <= run.end_time) {
      ++rep.unification_checked;
      for (const auto& u : honest) {
        auto r = round_at(u, next->second + delta);
        if (!r || *r < round.next()) {
          ++rep.unification_failed;
          rep.ok = false;
          rep.failures.push_back(u.str() + " missed unified round " + std::to_string(round.next().value));
          break;
        }
      }
    }

    bool unified = true;
    for (const auto& u : honest) {
      const auto& entries = per_node[u];
      auto hit = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.second == round; });
      if (hit == entries.end() || hit->first > t_i + delta) unified = false;
    }
    const Ticks deadline = t_i + delta + s.timers.creator_timeout;
    if (!unified || deadline > phase->end || deadline > run.end_time) continue;
    ++rep.progress_checked;
    const bool made = std::any_of(run.creations.begin(), run.creations.end(), [&](const Creation& c) {
      return c.node == creator && c.round == round && c.at <= deadline;
    });
    if (!made) {
      ++rep.progress_failed;
      rep.ok = false;
      rep.failures.push_back(creator.str() + " produced nothing in unified round " + std::to_string(round.value));
    }
  }
  return rep;
}

bool has_honest_triple(const std::vector<bool>& byzantine, std::uint64_t start) {
  const auto n = byzantine.size();
  std::uint32_t run = 0;
  for (std::uint64_t r = start; r < start + n + 2; ++r) {
    run = byzantine[r % n] ? 0 : run + 1;
    if (run == 3) return true;
  }
  return false;
}

PlacementSweep sweep_creator_placements(std::uint32_t n) {
  PlacementSweep sweep;
  sweep.n = n;
  sweep.f = (n - 1) / 3;
  std::vector<bool> mask(n, false);
  std::fill(mask.end() - sweep.f, mask.end(), true);
  do {
    ++sweep.placements;
    bool all = true;
    for (std::uint64_t s = 0; s < n && all; ++s) all = has_honest_triple(mask, s);
    if (all) ++sweep.passed;
  } while (std::next_permutation(mask.begin(), mask.end()));
  return sweep;
}

}  // namespace permitbft
