#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "acp/source.hpp"

namespace acp::sim {

enum class ServiceKind { exponential, deterministic, link, instant };

// Service model of one FCFS station with an infinite buffer.
//   exponential:   i.i.d. Exp(mu) per packet, independent of size
//   deterministic: fixed service time
//   link:          packet bytes * 8 / rate_bps
//   instant:       zero service time
struct ServiceSpec {
  ServiceKind kind = ServiceKind::exponential;
  double mu = 1.0;            // exponential: packets/s
  double time = 1.0;          // deterministic: seconds
  double rate_bps = 1e6;      // link
  double prop_delay = 0.0;    // added after service, before the next station

  static ServiceSpec exponential(double mu) { return {ServiceKind::exponential, mu, 0, 0, 0}; }
  static ServiceSpec deterministic(double t) { return {ServiceKind::deterministic, 0, t, 0, 0}; }
  static ServiceSpec link(double bps) { return {ServiceKind::link, 0, 0, bps, 0}; }
  static ServiceSpec instant() { return {ServiceKind::instant, 0, 0, 0, 0}; }

  double service_time_for(std::uint32_t bytes) const;  // mean for exponential
};

// Background Poisson flow of fixed-size packets entering station `entry` and
// leaving after station `exit` (inclusive).
struct CrossFlow {
  int entry = 0;
  int exit = 0;
  double rate_bps = 0.0;
  std::uint32_t packet_bytes = 1000;
};

struct QueueNetwork {
  std::string name;
  std::vector<ServiceSpec> forward;
  std::vector<ServiceSpec> reverse;  // ACK path, needed for closed-loop runs
  std::vector<CrossFlow> cross;
  std::uint32_t payload_bytes = 1024;
  std::uint32_t overhead_bytes = 28;  // UDP + IPv4 headers
  std::uint32_t ack_bytes = 64;

  std::uint32_t update_bytes() const;
  void validate(bool closed_loop) const;  // throws ConfigError
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Arrival { poisson, periodic };

struct NodeMetrics {
  double avg_backlog = 0.0;    // update packets queued or in service
  double avg_occupancy = 0.0;  // all packets, including cross traffic
  double mean_sojourn = 0.0;   // update packets leaving in the window
  double update_arrival_rate = 0.0;
  std::uint64_t update_arrivals = 0;
  std::uint64_t update_departures = 0;
  std::uint64_t sojourn_samples = 0;
  double utilization_offered = 0.0;
};

struct Delivery {
  std::uint32_t seq = 0;
  double gen = 0.0;
  double delivered = 0.0;
};

struct AoiMetrics {
  double avg_age = 0.0;            // true time-average age at the sink
  double ci_halfwidth = 0.0;       // 95% batch means
  double avg_backlog_total = 0.0;  // sum over forward stations
  std::vector<NodeMetrics> nodes;  // forward stations
  double avg_system_time = 0.0;
  double avg_rtt = 0.0;            // closed loop only
  double throughput_ups = 0.0;
  double throughput_bps = 0.0;
  std::uint64_t delivered = 0;     // in the measurement window
  std::uint64_t generated = 0;
  double fairness = 1.0;
  bool unstable = false;
  // Closed loop only: source-side estimates over epochs in the window.
  double est_avg_age = 0.0;
  double est_avg_backlog = 0.0;
  double avg_lambda = 0.0;
  std::vector<Delivery> deliveries;  // when requested
};

struct RunOptions {
  double warmup_fraction = 0.1;
  int batches = 20;
  bool record_deliveries = false;
};

AoiMetrics run_fixed_rate(const QueueNetwork& net, double lambda, Arrival arrival,
                          double duration, std::uint64_t seed, const RunOptions& opts = {});

struct ClosedLoopOptions {
  RunOptions run;
  SourceConfig source;         // policy field is overridden by the call
  double start_spread = 1.0;   // sources start uniformly in [0, start_spread)
  bool keep_epochs = true;
};

struct ClosedLoopResult {
  std::vector<AoiMetrics> per_source;
  AoiMetrics aggregate;  // per-node backlogs, mean ages, fairness
  std::vector<std::vector<EpochRecord>> epochs;
  double fairness = 1.0;
};

ClosedLoopResult run_closed_loop(const QueueNetwork& net, const Policy& policy, int n_sources,
                                 double duration, std::uint64_t seed,
                                 const ClosedLoopOptions& opts = {});

struct CurvePoint {
  double lambda = 0.0;
  double avg_age = 0.0;
  double ci_halfwidth = 0.0;
};

struct SweepResult {
  double best_lambda = 0.0;
  double best_age = 0.0;
  std::vector<CurvePoint> curve;  // grid order
};

struct SweepOptions {
  RunOptions run;
  Arrival arrival = Arrival::poisson;
  double duration = 0.0;            // per point; used when target_updates == 0
  std::uint64_t target_updates = 0; // per point, counted in the window
  unsigned workers = 0;             // 0 = hardware concurrency
};

SweepResult sweep_lambda(const QueueNetwork& net, std::span<const double> grid,
                         std::uint64_t seed, const SweepOptions& opts);

// Jain's index (sum x)^2 / (n sum x^2). Throws on empty, negative or
// all-zero input.
double jain_index(std::span<const double> values);

}  // namespace acp::sim
