#include "acp/monitor.hpp"

#include "acp/wire.hpp"

namespace acp {

std::optional<std::vector<std::uint8_t>> MonitorAgent::on_datagram(
    double now, std::span<const std::uint8_t> bytes) {
  UpdatePacket p;
  try {
    p = decode_update(bytes);
  } catch (const WireError&) {
    ++counters_.malformed;
    return std::nullopt;
  }
  if (has_update_ && p.seq <= freshest_seq_) {
    ++counters_.discarded;
    return std::nullopt;
  }
  const double gen = static_cast<double>(p.gen_ts_us) * 1e-6;
  if (has_update_ && age_avg_) age_avg_->add(last_reset_, now, last_reset_ - freshest_ts_, 1.0);
  has_update_ = true;
  freshest_seq_ = p.seq;
  freshest_ts_ = gen;
  last_reset_ = now;
  ++counters_.accepted;

  const MonitorRecord rec{now, now - gen, p.seq};
  if (keep_trace_) trace_.push_back(rec);
  if (on_record) on_record(rec);

  AckPacket ack;
  ack.seq = p.seq;
  ack.echo_ts_us = p.gen_ts_us;
  return encode_ack(ack);
}

double MonitorAgent::age_at(double t) const {
  if (!has_update_) throw NoEstimateError("monitor: no update received yet");
  return t - freshest_ts_;
}

void MonitorAgent::measure(double start, double end, int batches) {
  age_avg_.emplace(start, end, batches);
}

const TimeAverage& MonitorAgent::finish(double t) {
  if (!age_avg_) throw std::logic_error("monitor: measure() was not called");
  if (has_update_ && t > last_reset_) {
    age_avg_->add(last_reset_, t, last_reset_ - freshest_ts_, 1.0);
    last_reset_ = t;
  }
  return *age_avg_;
}

}  // namespace acp
