#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <queue>
#include <random>

#include "acp/monitor.hpp"
#include "acp/random.hpp"
#include "acp/simkit.hpp"
#include "acp/time_average.hpp"
#include "acp/wire.hpp"

namespace acp::sim {

double ServiceSpec::service_time_for(std::uint32_t bytes) const {
  switch (kind) {
    case ServiceKind::exponential: return 1.0 / mu;
    case ServiceKind::deterministic: return time;
    case ServiceKind::link: return static_cast<double>(bytes) * 8.0 / rate_bps;
    case ServiceKind::instant: return 0.0;
  }
  return 0.0;
}

std::uint32_t QueueNetwork::update_bytes() const {
  return static_cast<std::uint32_t>(kHeaderSize) + payload_bytes + overhead_bytes;
}

namespace {

// Random sub-stream ids. Keeping them fixed per element means editing one
// part of a topology leaves the draws of unrelated elements unchanged.
constexpr std::uint64_t kArrivalStream = 1;
constexpr std::uint64_t kForwardStream = 100;
constexpr std::uint64_t kReverseStream = 400;
constexpr std::uint64_t kCrossStream = 700;
constexpr std::uint64_t kStartStream = 1000;

enum class PacketType : std::uint8_t { update, ack, cross };

struct Packet {
  PacketType type = PacketType::update;
  int owner = 0;  // source index, or cross flow index
  std::uint32_t seq = 0;
  std::uint32_t bytes = 0;
  int exit = 0;
  double gen = 0.0;
  double node_arrival = 0.0;
  std::vector<std::uint8_t> frame;
};

enum class EvKind : std::uint8_t { fixed_arrival, cross_arrival, service_done, hop, agent_timer, agent_start };

struct Event {
  double t;
  std::uint64_t order;
  EvKind kind;
  std::uint32_t a;
  std::uint64_t b;
};

struct EventLater {
  bool operator()(const Event& x, const Event& y) const {
    return x.t != y.t ? x.t > y.t : x.order > y.order;
  }
};

struct Station {
  ServiceSpec spec;
  std::deque<std::uint32_t> queue;
  std::mt19937_64 rng;
  int updates = 0;
  int total = 0;
  double last_change = 0.0;
  TimeAverage backlog;
  TimeAverage occupancy;
  std::uint64_t update_arrivals = 0;
  std::uint64_t update_departures = 0;
  std::uint64_t arrivals_in_window = 0;
  double sojourn_sum = 0.0;
  std::uint64_t sojourn_n = 0;
};

struct SinkAge {
  bool have = false;
  std::uint32_t freshest = 0;
  double z = 0.0;
  double last_reset = 0.0;
  TimeAverage age;
};

struct SourceStats {
  std::uint64_t delivered = 0;
  std::uint64_t generated = 0;
  double system_time_sum = 0.0;
};

class Engine {
 public:
  Engine(const QueueNetwork& net, double duration, std::uint64_t seed, const RunOptions& opts)
      : net_(net),
        duration_(duration),
        window_start_(opts.warmup_fraction * duration),
        seed_(seed),
        opts_(opts),
        forward_count_(static_cast<int>(net.forward.size())),
        reverse_count_(static_cast<int>(net.reverse.size())) {
    if (!(duration > 0.0)) throw std::invalid_argument("simulation duration must be > 0");
    if (!(opts.warmup_fraction >= 0.0 && opts.warmup_fraction < 1.0))
      throw std::invalid_argument("warmup fraction must be in [0, 1)");
    for (int i = 0; i < forward_count_; ++i)
      add_station(net.forward[static_cast<std::size_t>(i)], substream_seed(seed, kForwardStream + static_cast<std::uint64_t>(i)));
    for (int i = 0; i < reverse_count_; ++i)
      add_station(net.reverse[static_cast<std::size_t>(i)], substream_seed(seed, kReverseStream + static_cast<std::uint64_t>(i)));
    for (std::size_t j = 0; j < net.cross.size(); ++j) {
      cross_rngs_.emplace_back(substream_seed(seed, kCrossStream + j));
      const auto& f = net.cross[j];
      if (f.rate_bps > 0.0) schedule(next_cross_gap(j), EvKind::cross_arrival, static_cast<std::uint32_t>(j), 0);
    }
  }

  // Open-loop Poisson or periodic updates from a single source.
  void setup_fixed(double lambda, Arrival arrival) {
    lambda_ = lambda;
    arrival_ = arrival;
    arrival_rng_.seed(substream_seed(seed_, kArrivalStream));
    sinks_.resize(1);
    sinks_[0].age = TimeAverage(window_start_, duration_, opts_.batches);
    stats_.resize(1);
    const double first = arrival == Arrival::periodic ? 0.0 : draw_exponential(arrival_rng_, 1.0 / lambda);
    schedule(first, EvKind::fixed_arrival, 0, 0);
  }

  void setup_closed(const SourceConfig& cfg, int n, double spread) {
    if (reverse_count_ == 0) throw ConfigError("closed-loop runs need a reverse chain");
    closed_ = true;
    stats_.resize(static_cast<std::size_t>(n));
    tokens_.assign(static_cast<std::size_t>(n), 0);
    for (int s = 0; s < n; ++s) {
      agents_.push_back(std::make_unique<SourceAgent>(cfg));
      agents_.back()->set_measurement_start(window_start_);
      monitors_.push_back(std::make_unique<MonitorAgent>());
      monitors_.back()->keep_trace(false);
      monitors_.back()->measure(window_start_, duration_, opts_.batches);
      std::mt19937_64 rng(substream_seed(seed_, kStartStream + static_cast<std::uint64_t>(s)));
      const double start = spread > 0.0 ? spread * draw_uniform(rng) : 0.0;
      schedule(start, EvKind::agent_start, static_cast<std::uint32_t>(s), 0);
    }
  }

  void run() {
    while (!events_.empty()) {
      const Event ev = events_.top();
      if (ev.t > duration_) break;
      events_.pop();
      now_ = ev.t;
      dispatch(ev);
    }
    now_ = duration_;
    for (auto& st : stations_) record_change(st, duration_);
    for (auto& sink : sinks_)
      if (sink.have) sink.age.add(sink.last_reset, duration_, sink.last_reset - sink.z, 1.0);
    for (auto& m : monitors_) m->finish(duration_);
  }

  AoiMetrics fixed_metrics() const {
    AoiMetrics m = base_metrics();
    const SinkAge& sink = sinks_[0];
    m.avg_age = sink.age.mean();
    m.ci_halfwidth = sink.age.ci_halfwidth();
    const SourceStats& s = stats_[0];
    m.delivered = s.delivered;
    m.generated = s.generated;
    const double span = duration_ - window_start_;
    m.throughput_ups = static_cast<double>(s.delivered) / span;
    m.throughput_bps = m.throughput_ups * net_.update_bytes() * 8.0;
    m.avg_system_time = s.delivered ? s.system_time_sum / static_cast<double>(s.delivered) : 0.0;
    m.deliveries = deliveries_;
    // Offered load at or above capacity anywhere makes the run non-stationary.
    for (int i = 0; i < forward_count_; ++i) {
      if (offered_load(i, lambda_) >= 1.0) m.unstable = true;
    }
    for (int i = 0; i < forward_count_; ++i)
      m.nodes[static_cast<std::size_t>(i)].utilization_offered = offered_load(i, lambda_);
    return m;
  }

  ClosedLoopResult closed_metrics(bool keep_epochs) const {
    ClosedLoopResult r;
    r.aggregate = base_metrics();
    const double span = duration_ - window_start_;
    std::vector<double> ages;
    double age_sum = 0.0;
    for (std::size_t s = 0; s < agents_.size(); ++s) {
      AoiMetrics m;
      const TimeAverage& age = monitors_[s]->finish(duration_);
      m.avg_age = age.mean();
      m.ci_halfwidth = age.ci_halfwidth();
      m.delivered = stats_[s].delivered;
      m.generated = stats_[s].generated;
      m.throughput_ups = static_cast<double>(m.delivered) / span;
      m.throughput_bps = m.throughput_ups * net_.update_bytes() * 8.0;
      m.avg_system_time =
          m.delivered ? stats_[s].system_time_sum / static_cast<double>(m.delivered) : 0.0;
      const SourceSummary sum = agents_[s]->summary();
      m.est_avg_age = sum.avg_age_estimate;
      m.est_avg_backlog = sum.avg_backlog_estimate;
      m.avg_lambda = sum.avg_lambda;
      m.avg_rtt = sum.avg_rtt;
      ages.push_back(m.avg_age);
      age_sum += m.avg_age;
      r.aggregate.delivered += m.delivered;
      r.aggregate.generated += m.generated;
      r.aggregate.throughput_ups += m.throughput_ups;
      r.aggregate.throughput_bps += m.throughput_bps;
      r.aggregate.est_avg_backlog += m.est_avg_backlog;
      r.aggregate.est_avg_age += m.est_avg_age / static_cast<double>(agents_.size());
      r.aggregate.avg_lambda += m.avg_lambda;
      r.aggregate.avg_rtt += m.avg_rtt / static_cast<double>(agents_.size());
      r.per_source.push_back(std::move(m));
      if (keep_epochs) r.epochs.push_back(agents_[s]->epochs());
    }
    r.aggregate.avg_age = ages.empty() ? 0.0 : age_sum / static_cast<double>(ages.size());
    bool any_positive = false;
    for (double a : ages) any_positive = any_positive || a > 0.0;
    r.fairness = any_positive ? jain_index(ages) : 0.0;
    r.aggregate.fairness = r.fairness;
    for (auto& m : r.per_source) m.fairness = r.fairness;
    return r;
  }

 private:
  void add_station(const ServiceSpec& spec, std::uint64_t seed) {
    Station st;
    st.spec = spec;
    st.rng.seed(seed);
    st.backlog = TimeAverage(window_start_, duration_);
    st.occupancy = TimeAverage(window_start_, duration_);
    stations_.push_back(std::move(st));
  }

  double offered_load(int i, double lambda) const {
    const Station& st = stations_[static_cast<std::size_t>(i)];
    double load = lambda * st.spec.service_time_for(net_.update_bytes());
    for (const auto& f : net_.cross) {
      if (f.entry <= i && i <= f.exit && f.rate_bps > 0.0) {
        const double pps = f.rate_bps / (8.0 * f.packet_bytes);
        load += pps * st.spec.service_time_for(f.packet_bytes);
      }
    }
    return load;
  }

  AoiMetrics base_metrics() const {
    AoiMetrics m;
    const double span = duration_ - window_start_;
    for (int i = 0; i < forward_count_; ++i) {
      const Station& st = stations_[static_cast<std::size_t>(i)];
      NodeMetrics nm;
      nm.avg_backlog = st.backlog.mean();
      nm.avg_occupancy = st.occupancy.mean();
      nm.mean_sojourn = st.sojourn_n ? st.sojourn_sum / static_cast<double>(st.sojourn_n) : 0.0;
      nm.sojourn_samples = st.sojourn_n;
      nm.update_arrivals = st.update_arrivals;
      nm.update_departures = st.update_departures;
      nm.update_arrival_rate = static_cast<double>(st.arrivals_in_window) / span;
      m.avg_backlog_total += nm.avg_backlog;
      m.nodes.push_back(nm);
    }
    return m;
  }

  void schedule(double t, EvKind kind, std::uint32_t a, std::uint64_t b) {
    if (t > duration_) return;
    events_.push(Event{t, order_++, kind, a, b});
  }

  double next_cross_gap(std::size_t j) {
    const auto& f = net_.cross[j];
    const double pps = f.rate_bps / (8.0 * f.packet_bytes);
    return draw_exponential(cross_rngs_[j], 1.0 / pps);
  }

  std::uint32_t alloc_packet() {
    if (!free_.empty()) {
      const std::uint32_t id = free_.back();
      free_.pop_back();
      return id;
    }
    packets_.emplace_back();
    return static_cast<std::uint32_t>(packets_.size() - 1);
  }

  void free_packet(std::uint32_t id) {
    packets_[id].frame.clear();
    free_.push_back(id);
  }

  void record_change(Station& st, double t) {
    if (t > st.last_change) {
      st.backlog.add(st.last_change, t, st.updates, 0.0);
      st.occupancy.add(st.last_change, t, st.total, 0.0);
      st.last_change = t;
    }
  }

  void enqueue(int station, std::uint32_t pid, double t) {
    Station& st = stations_[static_cast<std::size_t>(station)];
    Packet& p = packets_[pid];
    record_change(st, t);
    if (p.type == PacketType::update && station < forward_count_) {
      ++st.updates;
      ++st.update_arrivals;
      if (t >= window_start_) ++st.arrivals_in_window;
    }
    ++st.total;
    p.node_arrival = t;
    st.queue.push_back(pid);
    if (st.queue.size() == 1) start_service(station, t);
  }

  void start_service(int station, double t) {
    Station& st = stations_[static_cast<std::size_t>(station)];
    const Packet& p = packets_[st.queue.front()];
    double s = 0.0;
    switch (st.spec.kind) {
      case ServiceKind::exponential: s = draw_exponential(st.rng, 1.0 / st.spec.mu); break;
      case ServiceKind::deterministic: s = st.spec.time; break;
      case ServiceKind::link: s = static_cast<double>(p.bytes) * 8.0 / st.spec.rate_bps; break;
      case ServiceKind::instant: s = 0.0; break;
    }
    schedule(t + s, EvKind::service_done, static_cast<std::uint32_t>(station), 0);
  }

  void service_done(int station, double t) {
    Station& st = stations_[static_cast<std::size_t>(station)];
    const std::uint32_t pid = st.queue.front();
    st.queue.pop_front();
    Packet& p = packets_[pid];
    record_change(st, t);
    if (p.type == PacketType::update && station < forward_count_) {
      --st.updates;
      ++st.update_departures;
      if (t >= window_start_) {
        st.sojourn_sum += t - p.node_arrival;
        ++st.sojourn_n;
      }
    }
    --st.total;
    if (!st.queue.empty()) start_service(station, t);
    route(station, pid, t);
  }

  int sink_id() const { return forward_count_ + reverse_count_; }
  int source_side_id() const { return forward_count_ + reverse_count_ + 1; }

  void route(int station, std::uint32_t pid, double t) {
    const Packet& p = packets_[pid];
    int dest;
    if (station < forward_count_) {
      if (p.type == PacketType::cross && station >= p.exit) {
        free_packet(pid);
        return;
      }
      dest = station + 1 < forward_count_ ? station + 1 : sink_id();
    } else {
      dest = station + 1 < forward_count_ + reverse_count_ ? station + 1 : source_side_id();
    }
    const double prop = stations_[static_cast<std::size_t>(station)].spec.prop_delay;
    if (prop > 0.0)
      schedule(t + prop, EvKind::hop, static_cast<std::uint32_t>(dest), pid);
    else
      arrive(dest, pid, t);
  }

  void arrive(int dest, std::uint32_t pid, double t) {
    if (dest < forward_count_ + reverse_count_) {
      enqueue(dest, pid, t);
    } else if (dest == sink_id()) {
      deliver_to_sink(pid, t);
    } else {
      deliver_to_source(pid, t);
    }
  }

  void deliver_to_sink(std::uint32_t pid, double t) {
    Packet& p = packets_[pid];
    const auto s = static_cast<std::size_t>(p.owner);
    if (t >= window_start_) {
      ++stats_[s].delivered;
      stats_[s].system_time_sum += t - p.gen;
    }
    if (!closed_) {
      SinkAge& sink = sinks_[s];
      if (!sink.have || p.seq > sink.freshest) {
        if (sink.have) sink.age.add(sink.last_reset, t, sink.last_reset - sink.z, 1.0);
        sink.have = true;
        sink.freshest = p.seq;
        sink.z = p.gen;
        sink.last_reset = t;
      }
      if (opts_.record_deliveries) deliveries_.push_back(Delivery{p.seq, p.gen, t});
      free_packet(pid);
      return;
    }
    auto ack = monitors_[s]->on_datagram(t, p.frame);
    if (!ack) {
      free_packet(pid);
      return;
    }
    p.type = PacketType::ack;
    p.bytes = net_.ack_bytes;
    p.frame = std::move(*ack);
    enqueue(forward_count_, pid, t);
  }

  void deliver_to_source(std::uint32_t pid, double t) {
    const Packet& p = packets_[pid];
    const int s = p.owner;
    agents_[static_cast<std::size_t>(s)]->on_datagram(t, p.frame);
    free_packet(pid);
    pump(s, t);
  }

  void pump(int s, double t) {
    SourceAgent& agent = *agents_[static_cast<std::size_t>(s)];
    for (auto& frame : agent.take_outbox()) {
      const std::uint32_t pid = alloc_packet();
      Packet& p = packets_[pid];
      p.type = PacketType::update;
      p.owner = s;
      p.seq = 0;
      p.bytes = static_cast<std::uint32_t>(frame.size()) + net_.overhead_bytes;
      p.gen = t;
      p.frame = std::move(frame);
      if (t >= window_start_) ++stats_[static_cast<std::size_t>(s)].generated;
      enqueue(0, pid, t);
    }
    const double d = agent.next_deadline();
    if (std::isfinite(d)) {
      const auto token = ++tokens_[static_cast<std::size_t>(s)];
      schedule(std::max(d, t), EvKind::agent_timer, static_cast<std::uint32_t>(s), token);
    }
  }

  void dispatch(const Event& ev) {
    switch (ev.kind) {
      case EvKind::fixed_arrival: {
        const std::uint32_t pid = alloc_packet();
        Packet& p = packets_[pid];
        p.type = PacketType::update;
        p.owner = 0;
        p.seq = ++fixed_seq_;
        p.bytes = net_.update_bytes();
        p.gen = ev.t;
        if (ev.t >= window_start_) ++stats_[0].generated;
        enqueue(0, pid, ev.t);
        double next;
        if (arrival_ == Arrival::periodic)
          next = static_cast<double>(fixed_seq_) / lambda_;
        else
          next = ev.t + draw_exponential(arrival_rng_, 1.0 / lambda_);
        schedule(next, EvKind::fixed_arrival, 0, 0);
        break;
      }
      case EvKind::cross_arrival: {
        const std::size_t j = ev.a;
        const auto& f = net_.cross[j];
        const std::uint32_t pid = alloc_packet();
        Packet& p = packets_[pid];
        p.type = PacketType::cross;
        p.owner = static_cast<int>(j);
        p.bytes = f.packet_bytes;
        p.exit = f.exit;
        p.gen = ev.t;
        enqueue(f.entry, pid, ev.t);
        schedule(ev.t + next_cross_gap(j), EvKind::cross_arrival, ev.a, 0);
        break;
      }
      case EvKind::service_done: service_done(static_cast<int>(ev.a), ev.t); break;
      case EvKind::hop: arrive(static_cast<int>(ev.a), static_cast<std::uint32_t>(ev.b), ev.t); break;
      case EvKind::agent_start:
        agents_[ev.a]->start(ev.t);
        pump(static_cast<int>(ev.a), ev.t);
        break;
      case EvKind::agent_timer:
        if (tokens_[ev.a] == ev.b) {
          agents_[ev.a]->on_timer(ev.t);
          pump(static_cast<int>(ev.a), ev.t);
        }
        break;
    }
  }

  const QueueNetwork& net_;
  double duration_;
  double window_start_;
  std::uint64_t seed_;
  RunOptions opts_;
  int forward_count_;
  int reverse_count_;

  std::vector<Station> stations_;
  std::vector<std::mt19937_64> cross_rngs_;
  std::vector<Packet> packets_;
  std::vector<std::uint32_t> free_;
  std::priority_queue<Event, std::vector<Event>, EventLater> events_;
  std::uint64_t order_ = 0;
  double now_ = 0.0;

  double lambda_ = 0.0;
  Arrival arrival_ = Arrival::poisson;
  std::mt19937_64 arrival_rng_;
  std::uint32_t fixed_seq_ = 0;
  std::vector<SinkAge> sinks_;
  std::vector<Delivery> deliveries_;

  bool closed_ = false;
  std::vector<std::unique_ptr<SourceAgent>> agents_;
  std::vector<std::unique_ptr<MonitorAgent>> monitors_;
  std::vector<std::uint64_t> tokens_;
  std::vector<SourceStats> stats_;
};

}  // namespace

AoiMetrics run_fixed_rate(const QueueNetwork& net, double lambda, Arrival arrival,
                          double duration, std::uint64_t seed, const RunOptions& opts) {
  net.validate(false);
  if (!(lambda > 0.0)) throw std::invalid_argument("run_fixed_rate: lambda must be > 0");
  Engine engine(net, duration, seed, opts);
  engine.setup_fixed(lambda, arrival);
  engine.run();
  return engine.fixed_metrics();
}

ClosedLoopResult run_closed_loop(const QueueNetwork& net, const Policy& policy, int n_sources,
                                 double duration, std::uint64_t seed,
                                 const ClosedLoopOptions& opts) {
  net.validate(true);
  if (n_sources < 1) throw std::invalid_argument("run_closed_loop: need at least one source");
  SourceConfig cfg = opts.source;
  cfg.policy = policy;
  cfg.payload_size = net.payload_bytes;
  cfg.validate();
  Engine engine(net, duration, seed, opts.run);
  engine.setup_closed(cfg, n_sources, opts.start_spread);
  engine.run();
  return engine.closed_metrics(opts.keep_epochs);
}

}  // namespace acp::sim
