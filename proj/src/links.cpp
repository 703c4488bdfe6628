#include "acp/link.hpp"

#include <algorithm>
#include <cmath>

#include "acp/random.hpp"

namespace acp {

SimulatedLink::SimulatedLink(PathModel forward, PathModel reverse, std::uint64_t seed,
                             Responder responder)
    : forward_(forward),
      reverse_(reverse),
      fwd_rng_(substream_seed(seed, 1)),
      rev_rng_(substream_seed(seed, 2)),
      responder_(std::move(responder)) {
  for (const PathModel* m : {&forward_, &reverse_}) {
    if (m->delay < 0.0 || m->loss < 0.0 || m->loss > 1.0 || m->reorder_prob < 0.0 ||
        m->reorder_prob > 1.0 || m->reorder_extra < 0.0)
      throw std::invalid_argument("simulated link: invalid path model");
  }
}

double SimulatedLink::draw_delay(const PathModel& m, std::mt19937_64& rng) {
  double d = m.delay_kind == PathModel::Delay::constant ? m.delay : draw_exponential(rng, m.delay);
  if (m.reorder_prob > 0.0 && draw_uniform(rng) < m.reorder_prob) d += m.reorder_extra;
  return d;
}

void SimulatedLink::launch(double t, bool to_far_end, std::vector<std::uint8_t> bytes) {
  const PathModel& m = to_far_end ? forward_ : reverse_;
  auto& rng = to_far_end ? fwd_rng_ : rev_rng_;
  // Draw the loss coin first so a path's random sequence does not depend
  // on whether earlier datagrams were dropped.
  const bool lost = draw_uniform(rng) < m.loss;
  const double d = draw_delay(m, rng);
  if (lost) {
    ++dropped_;
    return;
  }
  pending_.push(InFlight{t + d, order_++, to_far_end, std::move(bytes)});
}

void SimulatedLink::send(std::span<const std::uint8_t> bytes) {
  launch(now_, true, std::vector<std::uint8_t>(bytes.begin(), bytes.end()));
}

std::optional<Datagram> SimulatedLink::receive_until(double deadline) {
  while (!pending_.empty() && pending_.top().t <= deadline) {
    InFlight ev = pending_.top();
    pending_.pop();
    now_ = std::max(now_, ev.t);
    if (ev.to_far_end) {
      if (auto reply = responder_(now_, ev.bytes)) launch(now_, false, std::move(*reply));
      continue;
    }
    return Datagram{std::move(ev.bytes), now_, "sim"};
  }
  if (std::isfinite(deadline)) now_ = std::max(now_, deadline);
  return std::nullopt;
}

}  // namespace acp
