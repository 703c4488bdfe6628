#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>

namespace acp {

using Seq = std::uint32_t;

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by age queries before any in-sequence ACK has arrived.
class NoEstimateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class Freshness { fresh, stale };

struct AckOutcome {
  Freshness freshness = Freshness::stale;
  std::optional<double> rtt_sample;  // RTT_i = t - a_i
  std::optional<double> z_sample;    // gap since the previous fresh ACK

  bool fresh() const { return freshness == Freshness::fresh; }
};

struct EpochStats {
  double start = 0.0;
  double end = 0.0;
  double delta_bar = 0.0;     // time-average estimated age
  double b_bar = 0.0;         // time-average estimated backlog
  double delta_diff = 0.0;    // delta_bar - previous delta_bar
  double b_diff = 0.0;        // b_bar - previous b_bar
  double backlog_now = 0.0;   // B(t) at the close instant
  bool has_previous = false;  // false for the first closed epoch
  bool has_age = false;       // an age estimate existed during the epoch
};

struct EstimatorConfig {
  double alpha = 0.25;
};

// Source-side reconstruction of the monitor's age and the in-flight backlog.
//
// B(t) = S(t) - N(t), where S is the highest sent index and N the highest
// index acknowledged in sequence. The age estimate is t - a_N and only
// resets on in-sequence ACKs. Areas under both sample paths are integrated
// piecewise-exactly between events and reset at every close_epoch().
//
// Callers serialize all calls; there is no internal locking.
class Estimator {
 public:
  explicit Estimator(EstimatorConfig cfg = {}, double start_time = 0.0);

  void on_send(double t, Seq seq, double gen_ts);
  AckOutcome on_ack(double t, Seq seq);
  EpochStats close_epoch(double t);

  double age_at(double t) const;
  bool has_estimate() const { return n_hat_ > 0; }

  Seq sent() const { return s_; }
  Seq acked() const { return n_hat_; }
  std::uint32_t backlog() const { return s_ - n_hat_; }

  double rtt_ewma() const;
  double z_ewma() const;
  double alpha() const { return cfg_.alpha; }
  double epoch_start() const { return epoch_start_; }
  double last_event_time() const { return last_t_; }
  std::size_t send_log_size() const { return send_log_.size(); }

 private:
  void advance(double t);

  EstimatorConfig cfg_;
  std::map<Seq, double> send_log_;  // seq -> a_i, only entries above n_hat_
  Seq s_ = 0;
  Seq n_hat_ = 0;
  double a_n_hat_ = 0.0;  // generation time of update n_hat_
  double last_fresh_ack_ = 0.0;
  double rtt_ewma_ = 0.0;
  double z_ewma_ = 0.0;
  int fresh_acks_ = 0;

  double last_t_ = 0.0;
  double last_send_t_ = 0.0;
  double epoch_start_ = 0.0;
  double age_area_ = 0.0;
  double age_covered_ = 0.0;
  double backlog_area_ = 0.0;

  std::optional<EpochStats> previous_;
};

inline double ewma(double average, double sample, double alpha) {
  return (1.0 - alpha) * average + alpha * sample;
}

}  // namespace acp
