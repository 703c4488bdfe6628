#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "acp/controller.hpp"
#include "acp/estimator.hpp"

namespace acp {

enum class PolicyKind { acp_plus, lazy, fixed };

struct Policy {
  PolicyKind kind = PolicyKind::acp_plus;
  double fixed_rate = 0.0;  // updates/s, only for PolicyKind::fixed

  static Policy acp_plus() { return {}; }
  static Policy lazy() { return {PolicyKind::lazy, 0.0}; }
  static Policy fixed(double rate) { return {PolicyKind::fixed, rate}; }

  // Accepts "acp_plus", "lazy" and "fixed:<rate>".
  static Policy parse(const std::string& text);
  std::string label() const;
};

// Which backlog MDEC scales: B(t_k) at the epoch close or the epoch average.
enum class MdecBacklog { instantaneous, average };

struct SourceConfig {
  int probe_count = 10;
  double probe_timeout = 1.0;  // seconds
  std::size_t payload_size = 1024;
  int eta = 10;
  double alpha = 0.25;
  Policy policy;
  MdecBacklog mdec_backlog = MdecBacklog::instantaneous;

  void validate() const;  // throws std::invalid_argument
};

// One record per closed control epoch. lambda is the rate adopted from t
// onward; rate_used is the rate that was in force during the epoch.
struct EpochRecord {
  int epoch = 0;
  double t = 0.0;
  double lambda = 0.0;
  double delta_bar = 0.0;
  double b_bar = 0.0;
  std::string action;
  double rtt_ewma = 0.0;
  double z_ewma = 0.0;
  double start = 0.0;
  double rate_used = 0.0;
  bool has_age = false;
};

class InitFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SourcePhase { idle, probing, running, failed };

struct SourceCounters {
  std::uint64_t sent = 0;
  std::uint64_t acks = 0;
  std::uint64_t fresh = 0;
  std::uint64_t stale = 0;
  std::uint64_t malformed = 0;
};

// Summary over the epochs closed since a measurement start time.
struct SourceSummary {
  double avg_age_estimate = 0.0;
  double avg_backlog_estimate = 0.0;
  double avg_lambda = 0.0;
  double avg_rtt = 0.0;
  double ack_rate = 0.0;  // in-sequence ACKs per second
  int epochs = 0;
  double elapsed = 0.0;
};

// Sans-IO ACP source endpoint. The owner feeds it clock ticks and inbound
// datagrams and drains outbound frames; the same agent runs over real UDP
// and inside the simulator.
//
// Lifecycle: start() begins the stop-and-wait initialization (probe_count
// probes, each waiting for its ACK or probe_timeout). lambda_1 is the inverse
// of the mean probe RTT. Control epochs follow, each of length eta/lambda_k,
// with updates paced every 1/lambda_k.
class SourceAgent {
 public:
  explicit SourceAgent(SourceConfig cfg);

  void start(double now);
  void on_datagram(double now, std::span<const std::uint8_t> bytes);
  void on_timer(double now);

  // Earliest time on_timer() has work to do; +inf when idle or failed.
  double next_deadline() const;
  std::vector<std::vector<std::uint8_t>> take_outbox();

  SourcePhase phase() const { return phase_; }
  double initial_lambda() const { return initial_lambda_; }
  double current_lambda() const { return lambda_; }
  double first_epoch_start() const { return t1_; }
  const std::vector<double>& probe_rtts() const { return probe_rtts_; }
  const std::vector<EpochRecord>& epochs() const { return epochs_; }
  const Estimator& estimator() const { return estimator_; }
  const Controller& controller() const { return controller_; }
  const SourceCounters& counters() const { return counters_; }
  const SourceConfig& config() const { return cfg_; }
  const std::vector<double>& send_times() const { return send_times_; }

  // Only epochs starting at or after t count toward summary(); RTT samples
  // are averaged from t as well. Call before the first epoch closes.
  void set_measurement_start(double t) { measure_from_ = t; }
  SourceSummary summary() const;

  // Keep every send instant (tests of pacing); off by default.
  void record_send_times(bool on) { keep_send_times_ = on; }
  // Keep every EpochRecord for epochs(); on by default. Long live runs turn
  // it off and stream records through on_epoch; summary() is unaffected.
  void keep_epochs(bool on) { keep_epochs_ = on; }
  std::function<void(const EpochRecord&)> on_epoch;

 private:
  static constexpr double kNever = std::numeric_limits<double>::infinity();

  void send_update(double now);
  void send_probe(double now);
  void finish_probing(double now);
  void begin_epoch(double t, double lambda);
  void close_epoch(double t);
  double next_send_time() const;

  SourceConfig cfg_;
  Estimator estimator_;
  Controller controller_;
  SourcePhase phase_ = SourcePhase::idle;
  SourceCounters counters_;
  std::vector<std::vector<std::uint8_t>> outbox_;
  std::vector<std::uint8_t> payload_;

  Seq next_seq_ = 1;
  double last_send_ = 0.0;

  int probes_sent_ = 0;
  Seq probe_seq_ = 0;
  double probe_deadline_ = kNever;
  std::vector<double> probe_rtts_;

  double initial_lambda_ = 0.0;
  double lambda_ = 0.0;
  double t1_ = 0.0;
  int epoch_index_ = 0;
  double epoch_start_ = 0.0;
  double epoch_end_ = kNever;
  double epoch_rate_ = 0.0;
  int epoch_sends_ = 0;
  bool sent_in_run_ = false;
  std::vector<EpochRecord> epochs_;

  bool keep_epochs_ = true;

  // Running sums behind summary().
  struct EpochTotals {
    double len = 0.0, age_len = 0.0;
    double backlog = 0.0, lambda = 0.0, age = 0.0;
    double first = kNever, last = 0.0;
    int epochs = 0;
  } totals_;

  double measure_from_ = 0.0;
  double rtt_sum_ = 0.0;
  std::uint64_t rtt_count_ = 0;
  bool keep_send_times_ = false;
  std::vector<double> send_times_;
};

// Lazy baseline: one update per smoothed RTT.
double lazy_rate(double rtt_ewma);

}  // namespace acp
