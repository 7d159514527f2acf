#include "permitbft/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <Eigen/Dense>

namespace permitbft {

RunMetrics collect_metrics(const Scenario& s, const RunResult& run) {
  RunMetrics m;
  m.violations = run.violations.size();
  m.committed_txs = run.oracle ? run.oracle->committed_txs().size() : 0;
  m.blocks = run.oracle ? run.oracle->dag().size() - 1 : 0;
  for (const auto& tx : run.txs) {
    if (tx.honest_target && tx.committed) {
      m.latencies.push_back(static_cast<double>(*tx.committed - tx.injected) / static_cast<double>(s.timers.delta));
    }
  }

  Round last_closed;
  bool closed_any = false;
  for (const auto& [node, r] : run.final_rounds) {
    if (r.value == 0) continue;
    const Round done{r.value - 1};
    if (!closed_any || done < last_closed) last_closed = done;
    closed_any = true;
  }
  std::map<Round, RoundTraffic> by_round;
  for (const auto& msg : run.messages) {
    ++m.total_messages;
    if (!msg.round) {
      ++m.fetch_messages;
      continue;
    }
    auto& t = by_round[*msg.round];
    t.round = *msg.round;
    ++t.total;
    ++t.by_kind[std::string(msg.kind)];
  }
  std::set<Round> block_rounds;
  std::set<Round> proposal_rounds;
  for (const auto& c : run.creations) (c.is_block ? block_rounds : proposal_rounds).insert(c.round);
  for (auto& [r, t] : by_round) {
    if (!closed_any || r > last_closed) continue;
    t.block_round = block_rounds.count(r) != 0;
    t.failure_round = !t.block_round && !proposal_rounds.count(r);
    m.rounds.push_back(t);
  }
  return m;
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return s;
}

QuadraticFit fit_quadratic(const std::vector<double>& xs, const std::vector<double>& ys) {
  const auto k = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd a(k, 3);
  Eigen::VectorXd y(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double x = xs[static_cast<std::size_t>(i)];
    a(i, 0) = x * x;
    a(i, 1) = x;
    a(i, 2) = 1.0;
    y(i) = ys[static_cast<std::size_t>(i)];
  }
  const Eigen::Vector3d coef = a.colPivHouseholderQr().solve(y);
  QuadraticFit fit{coef(0), coef(1), coef(2), 0.0};
  fit.max_abs_residual = (a * coef - y).cwiseAbs().maxCoeff();
  return fit;
}

}  // namespace permitbft
