#include <algorithm>
#include <atomic>
#include <thread>

#include "acp/sim_config.hpp"
#include "acp/simkit.hpp"

namespace acp::sim {

SweepResult sweep_lambda(const QueueNetwork& net, std::span<const double> grid, std::uint64_t seed,
                         const SweepOptions& opts) {
  if (grid.empty()) throw std::invalid_argument("sweep_lambda: empty grid");
  if (opts.target_updates == 0 && !(opts.duration > 0.0))
    throw std::invalid_argument("sweep_lambda: need a duration or a per-point update target");
  for (double l : grid)
    if (!(l > 0.0)) throw std::invalid_argument("sweep_lambda: grid values must be > 0");
  net.validate(false);

  // Every grid point reuses the same seed: common random numbers make the
  // curve smoother than independent draws would.
  std::vector<CurvePoint> curve(grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      const double lambda = grid[i];
      const double duration = opts.target_updates > 0
                                  ? duration_for_updates(opts.target_updates, lambda, opts.run.warmup_fraction)
                                  : opts.duration;
      const AoiMetrics m = run_fixed_rate(net, lambda, opts.arrival, duration, seed, opts.run);
      curve[i] = CurvePoint{lambda, m.avg_age, m.ci_halfwidth};
    }
  };
  unsigned n = opts.workers ? opts.workers : std::max(1u, std::thread::hardware_concurrency());
  n = std::min<unsigned>(n, static_cast<unsigned>(grid.size()));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < n; ++w) pool.emplace_back(worker);
  }

  SweepResult r;
  r.curve = std::move(curve);
  const auto best = std::min_element(r.curve.begin(), r.curve.end(),
                                     [](const CurvePoint& a, const CurvePoint& b) { return a.avg_age < b.avg_age; });
  r.best_lambda = best->lambda;
  r.best_age = best->avg_age;
  return r;
}

}  // namespace acp::sim
