#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "acp/estimator.hpp"
#include "acp/time_average.hpp"

namespace acp {

// Age reset at the monitor: at time t the freshest update became seq,
// whose age at that instant is age_reset.
struct MonitorRecord {
  double t = 0.0;
  double age_reset = 0.0;
  Seq seq = 0;
};

struct MonitorCounters {
  std::uint64_t accepted = 0;
  std::uint64_t discarded = 0;
  std::uint64_t malformed = 0;
};

// Sans-IO monitor endpoint. Tracks z(t), the generation time of the freshest
// update received; the true age is t - z(t). Updates whose seq does not
// exceed the freshest one are discarded and not acknowledged.
class MonitorAgent {
 public:
  MonitorAgent() = default;

  // Returns the ACK frame to send back, if any.
  std::optional<std::vector<std::uint8_t>> on_datagram(double now,
                                                       std::span<const std::uint8_t> bytes);

  bool has_update() const { return has_update_; }
  Seq freshest_seq() const { return freshest_seq_; }
  double freshest_ts() const { return freshest_ts_; }
  double age_at(double t) const;

  const MonitorCounters& counters() const { return counters_; }
  const std::vector<MonitorRecord>& trace() const { return trace_; }
  void keep_trace(bool on) { keep_trace_ = on; }
  std::function<void(const MonitorRecord&)> on_record;

  // Time-average of the true age over [start, end]. Must be called before
  // the first datagram that falls in the window.
  void measure(double start, double end, int batches = 1);
  // Closes the age path at t (normally the window end) and returns it.
  const TimeAverage& finish(double t);

 private:
  bool has_update_ = false;
  Seq freshest_seq_ = 0;
  double freshest_ts_ = 0.0;
  double last_reset_ = 0.0;
  MonitorCounters counters_;
  bool keep_trace_ = true;
  std::vector<MonitorRecord> trace_;
  std::optional<TimeAverage> age_avg_;
};

}  // namespace acp
