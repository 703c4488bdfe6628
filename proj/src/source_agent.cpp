#include "acp/source.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "acp/wire.hpp"

namespace acp {

Policy Policy::parse(const std::string& text) {
  if (text == "acp_plus" || text == "acp+") return acp_plus();
  if (text == "lazy") return lazy();
  const std::string prefix = "fixed:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string num = text.substr(prefix.size());
    std::size_t used = 0;
    double rate = 0.0;
    try {
      rate = std::stod(num, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != num.size() || !(rate > 0.0) || !std::isfinite(rate))
      throw std::invalid_argument("policy: bad fixed rate '" + num + "'");
    return fixed(rate);
  }
  throw std::invalid_argument("policy: expected acp_plus, lazy or fixed:<rate>, got '" + text +
                              "'");
}

std::string Policy::label() const {
  switch (kind) {
    case PolicyKind::acp_plus: return "acp_plus";
    case PolicyKind::lazy: return "lazy";
    case PolicyKind::fixed: {
      std::string s = std::to_string(fixed_rate);
      s.erase(s.find_last_not_of('0') + 1);
      if (!s.empty() && s.back() == '.') s.pop_back();
      return "fixed:" + s;
    }
  }
  return "?";
}

void SourceConfig::validate() const {
  if (probe_count < 1) throw std::invalid_argument("source: probe_count must be >= 1");
  if (!(probe_timeout > 0.0)) throw std::invalid_argument("source: probe_timeout must be > 0");
  if (payload_size > kMaxPayload)
    throw std::invalid_argument("source: payload_size exceeds 65000 bytes");
  if (eta < 1) throw std::invalid_argument("source: eta must be >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("source: alpha must be in (0,1]");
  if (policy.kind == PolicyKind::fixed && !(policy.fixed_rate > 0.0))
    throw std::invalid_argument("source: fixed rate must be > 0");
}

double lazy_rate(double rtt_ewma) {
  if (!(rtt_ewma > 0.0)) throw std::invalid_argument("lazy_rate: RTT must be positive");
  return 1.0 / rtt_ewma;
}

SourceAgent::SourceAgent(SourceConfig cfg)
    : cfg_((cfg.validate(), cfg)),
      estimator_(EstimatorConfig{cfg.alpha}),
      controller_(ControllerConfig{cfg.eta, 16}),
      payload_(cfg.payload_size, 0) {}

void SourceAgent::start(double now) {
  if (phase_ != SourcePhase::idle) throw std::logic_error("source: already started");
  estimator_ = Estimator(EstimatorConfig{cfg_.alpha}, now);
  phase_ = SourcePhase::probing;
  send_probe(now);
}

void SourceAgent::send_update(double now) {
  const Seq seq = next_seq_++;
  estimator_.on_send(now, seq, now);
  UpdatePacket p;
  p.seq = seq;
  p.gen_ts_us = static_cast<std::uint64_t>(std::llround(std::max(now, 0.0) * 1e6));
  p.payload = payload_;
  outbox_.push_back(encode_update(p));
  last_send_ = now;
  ++counters_.sent;
  if (keep_send_times_) send_times_.push_back(now);
}

void SourceAgent::send_probe(double now) {
  ++probes_sent_;
  probe_seq_ = next_seq_;
  probe_deadline_ = now + cfg_.probe_timeout;
  send_update(now);
}

void SourceAgent::finish_probing(double now) {
  probe_deadline_ = kNever;
  if (probe_rtts_.empty()) {
    phase_ = SourcePhase::failed;
    return;
  }
  const double mean = std::accumulate(probe_rtts_.begin(), probe_rtts_.end(), 0.0) /
                      static_cast<double>(probe_rtts_.size());
  initial_lambda_ = 1.0 / mean;
  if (cfg_.policy.kind == PolicyKind::fixed) initial_lambda_ = cfg_.policy.fixed_rate;
  phase_ = SourcePhase::running;
  t1_ = now;
  // Epoch 1 starts here; statistics before t1 belong to initialization.
  if (now > estimator_.epoch_start()) estimator_.close_epoch(now);
  begin_epoch(now, initial_lambda_);
}

void SourceAgent::begin_epoch(double t, double lambda) {
  ++epoch_index_;
  lambda_ = lambda;
  epoch_start_ = t;
  epoch_rate_ = lambda;
  epoch_sends_ = 0;
  epoch_end_ = t + epoch_length(lambda, cfg_.eta);
}

double SourceAgent::next_send_time() const {
  if (cfg_.policy.kind == PolicyKind::lazy) {
    if (!sent_in_run_) return t1_;
    return last_send_ + 1.0 / lambda_;
  }
  if (epoch_sends_ >= cfg_.eta) return kNever;
  return epoch_start_ + static_cast<double>(epoch_sends_) / epoch_rate_;
}

double SourceAgent::next_deadline() const {
  switch (phase_) {
    case SourcePhase::probing: return probe_deadline_;
    case SourcePhase::running: return std::min(epoch_end_, next_send_time());
    default: return kNever;
  }
}

void SourceAgent::close_epoch(double t) {
  const EpochStats st = estimator_.close_epoch(t);
  EpochRecord rec;
  rec.epoch = epoch_index_;
  rec.t = t;
  rec.start = st.start;
  rec.delta_bar = st.delta_bar;
  rec.b_bar = st.b_bar;
  rec.has_age = st.has_age;
  rec.rate_used = epoch_rate_;
  rec.rtt_ewma = estimator_.rtt_ewma();
  rec.z_ewma = estimator_.z_ewma();

  double next = lambda_;
  switch (cfg_.policy.kind) {
    case PolicyKind::acp_plus:
      if (!st.has_previous) {
        rec.action = "HOLD";
      } else {
        const double backlog =
            cfg_.mdec_backlog == MdecBacklog::instantaneous ? st.backlog_now : st.b_bar;
        const TargetChange tc = controller_.decide(st.b_diff, st.delta_diff, backlog);
        rec.action = tc.label();
        next = update_lambda(tc.b_star, rec.z_ewma, rec.rtt_ewma, epoch_rate_);
      }
      break;
    case PolicyKind::lazy:
      rec.action = "LAZY";
      next = lazy_rate(rec.rtt_ewma);
      break;
    case PolicyKind::fixed:
      rec.action = "FIXED";
      next = cfg_.policy.fixed_rate;
      break;
  }
  rec.lambda = next;
  if (rec.start >= measure_from_) {
    const double len = rec.t - rec.start;
    totals_.len += len;
    totals_.backlog += rec.b_bar * len;
    totals_.lambda += rec.rate_used * len;
    if (rec.has_age) {
      totals_.age += rec.delta_bar * len;
      totals_.age_len += len;
    }
    totals_.first = std::min(totals_.first, rec.start);
    totals_.last = std::max(totals_.last, rec.t);
    ++totals_.epochs;
  }
  if (keep_epochs_) epochs_.push_back(rec);
  if (on_epoch) on_epoch(rec);
  begin_epoch(t, next);
}

void SourceAgent::on_timer(double now) {
  if (phase_ == SourcePhase::probing) {
    if (now >= probe_deadline_) {
      if (probes_sent_ < cfg_.probe_count)
        send_probe(now);
      else
        finish_probing(now);
    }
    if (phase_ != SourcePhase::running) return;
  }
  if (phase_ != SourcePhase::running) return;
  for (;;) {
    const double send_at = next_send_time();
    if (epoch_end_ <= now && epoch_end_ <= send_at) {
      // A late wall-clock wakeup may already have stamped a send past the
      // scheduled end; the close cannot precede it.
      close_epoch(std::max(epoch_end_, estimator_.last_event_time()));
    } else if (send_at <= now) {
      // Simulated clocks hit the deadline exactly; wall clocks run late and
      // the update carries the actual send instant.
      send_update(now);
      ++epoch_sends_;
      sent_in_run_ = true;
    } else {
      break;
    }
  }
}

void SourceAgent::on_datagram(double now, std::span<const std::uint8_t> bytes) {
  AckPacket ack;
  try {
    ack = decode_ack(bytes);
  } catch (const WireError&) {
    ++counters_.malformed;
    return;
  }
  if (phase_ != SourcePhase::probing && phase_ != SourcePhase::running) return;
  if (ack.seq == 0 || ack.seq >= next_seq_) {
    ++counters_.malformed;
    return;
  }
  ++counters_.acks;
  // Process any timer work that is due first so events stay in time order.
  on_timer(now);
  const AckOutcome out = estimator_.on_ack(now, ack.seq);
  if (!out.fresh()) {
    ++counters_.stale;
    return;
  }
  ++counters_.fresh;
  if (now >= measure_from_) {
    rtt_sum_ += *out.rtt_sample;
    ++rtt_count_;
  }
  if (phase_ == SourcePhase::probing) {
    if (ack.seq == probe_seq_) {
      probe_rtts_.push_back(*out.rtt_sample);
      if (probes_sent_ < cfg_.probe_count)
        send_probe(now);
      else
        finish_probing(now);
    }
    return;
  }
  if (cfg_.policy.kind == PolicyKind::lazy) lambda_ = lazy_rate(estimator_.rtt_ewma());
}

std::vector<std::vector<std::uint8_t>> SourceAgent::take_outbox() {
  std::vector<std::vector<std::uint8_t>> out;
  out.swap(outbox_);
  return out;
}

SourceSummary SourceAgent::summary() const {
  SourceSummary s;
  s.epochs = totals_.epochs;
  if (totals_.len > 0.0) {
    s.avg_backlog_estimate = totals_.backlog / totals_.len;
    s.avg_lambda = totals_.lambda / totals_.len;
    s.elapsed = totals_.last - totals_.first;
  }
  if (totals_.age_len > 0.0) s.avg_age_estimate = totals_.age / totals_.age_len;
  if (rtt_count_ > 0) s.avg_rtt = rtt_sum_ / static_cast<double>(rtt_count_);
  if (s.elapsed > 0.0) s.ack_rate = static_cast<double>(rtt_count_) / s.elapsed;
  return s;
}

}  // namespace acp
