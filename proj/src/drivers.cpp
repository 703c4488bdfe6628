#include "acp/drivers.hpp"

#include <algorithm>
#include <map>

namespace acp {
namespace {

void flush(DatagramLink& link, SourceAgent& agent) {
  for (const auto& frame : agent.take_outbox()) link.send(frame);
}

// One step of the source event loop; returns false once `until` is reached.
bool step(DatagramLink& link, SourceAgent& agent, double until) {
  flush(link, agent);
  const double deadline = std::min(agent.next_deadline(), until);
  if (auto d = link.receive_until(deadline)) {
    agent.on_datagram(d->arrival_time, d->bytes);
  } else {
    const double now = link.now();
    if (now >= until) return false;
    if (now >= agent.next_deadline()) agent.on_timer(now);
  }
  flush(link, agent);
  return true;
}

}  // namespace

double run_initialization(DatagramLink& link, SourceAgent& agent) {
  if (agent.phase() == SourcePhase::idle) agent.start(link.now());
  const double inf = std::numeric_limits<double>::infinity();
  while (agent.phase() == SourcePhase::probing) step(link, agent, inf);
  if (agent.phase() == SourcePhase::failed)
    throw InitFailure("initialization failed: all " + std::to_string(agent.config().probe_count) +
                      " probes timed out");
  flush(link, agent);
  return agent.initial_lambda();
}

double run_initialization(DatagramLink& link, const SourceConfig& cfg) {
  SourceAgent agent(cfg);
  return run_initialization(link, agent);
}

SourceRun run_source(DatagramLink& link, const SourceConfig& cfg, double duration,
                     const std::function<void(const EpochRecord&)>& on_epoch,
                     bool keep_epochs) {
  if (!(duration > 0.0)) throw std::invalid_argument("run_source: duration must be > 0");
  SourceAgent agent(cfg);
  agent.keep_epochs(keep_epochs);
  if (on_epoch) agent.on_epoch = on_epoch;
  const double until = link.now() + duration;
  SourceRun run;
  try {
    run.initial_lambda = run_initialization(link, agent);
    agent.set_measurement_start(agent.first_epoch_start());
    while (step(link, agent, until)) {
    }
  } catch (const TransportError& e) {
    run.error = e.what();
  }
  run.epochs = agent.epochs();
  run.summary = agent.summary();
  run.counters = agent.counters();
  return run;
}

MonitorReport run_monitor(DatagramLink& link, const std::atomic<bool>& stop,
                          const std::function<void(const MonitorRecord&)>& on_record,
                          double max_duration) {
  std::map<std::string, MonitorAgent> agents;
  const double until = link.now() + max_duration;
  MonitorReport report;
  while (!stop.load()) {
    const double now = link.now();
    if (now >= until) break;
    auto d = link.receive_until(std::min(until, now + 0.1));
    if (!d) continue;
    auto [it, inserted] = agents.try_emplace(d->peer);
    MonitorAgent& agent = it->second;
    if (inserted) {
      agent.keep_trace(false);
      agent.on_record = on_record;
    }
    if (auto ack = agent.on_datagram(d->arrival_time, d->bytes)) link.send(*ack);
  }
  report.peers = agents.size();
  for (const auto& [peer, agent] : agents) {
    report.counters.accepted += agent.counters().accepted;
    report.counters.discarded += agent.counters().discarded;
    report.counters.malformed += agent.counters().malformed;
  }
  return report;
}

}  // namespace acp
