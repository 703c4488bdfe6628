#pragma once

#include <atomic>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "acp/link.hpp"
#include "acp/monitor.hpp"
#include "acp/source.hpp"

namespace acp {

// Runs only the stop-and-wait initialization; returns lambda_1.
// Throws InitFailure when every probe times out.
double run_initialization(DatagramLink& link, const SourceConfig& cfg);
double run_initialization(DatagramLink& link, SourceAgent& agent);

struct SourceRun {
  std::vector<EpochRecord> epochs;
  SourceSummary summary;
  SourceCounters counters;
  double initial_lambda = 0.0;
  std::optional<std::string> error;  // transport failure; epochs are partial
};

// Initialization followed by control epochs until `duration` seconds of
// link time have elapsed since the call. With keep_epochs false the returned
// run has no epochs; records still reach on_epoch.
SourceRun run_source(DatagramLink& link, const SourceConfig& cfg, double duration,
                     const std::function<void(const EpochRecord&)>& on_epoch = {},
                     bool keep_epochs = true);

struct MonitorReport {
  MonitorCounters counters;
  std::uint64_t peers = 0;
};

// Serves updates until `stop` is set or max_duration elapses. One
// MonitorAgent per peer address.
MonitorReport run_monitor(DatagramLink& link, const std::atomic<bool>& stop,
                          const std::function<void(const MonitorRecord&)>& on_record = {},
                          double max_duration = std::numeric_limits<double>::infinity());

}  // namespace acp
