#include "acp/estimator.hpp"

#include <string>

namespace acp {

Estimator::Estimator(EstimatorConfig cfg, double start_time)
    : cfg_(cfg), last_t_(start_time), last_send_t_(start_time), epoch_start_(start_time) {
  if (!(cfg_.alpha > 0.0 && cfg_.alpha <= 1.0))
    throw std::invalid_argument("estimator: alpha must lie in (0, 1]");
}

void Estimator::advance(double t) {
  if (t < last_t_)
    throw ProtocolError("estimator: time went backwards (" + std::to_string(t) + " < " +
                        std::to_string(last_t_) + ")");
  const double dt = t - last_t_;
  if (dt > 0.0) {
    backlog_area_ += static_cast<double>(s_ - n_hat_) * dt;
    if (n_hat_ > 0) {
      // Integral of (u - a) over [last_t_, t].
      age_area_ += dt * (0.5 * (last_t_ + t) - a_n_hat_);
      age_covered_ += dt;
    }
  }
  last_t_ = t;
}

void Estimator::on_send(double t, Seq seq, double gen_ts) {
  if (seq != s_ + 1)
    throw ProtocolError("estimator: send seq " + std::to_string(seq) + " does not follow " +
                        std::to_string(s_));
  if (t < last_send_t_) throw ProtocolError("estimator: send times must be non-decreasing");
  advance(t);
  s_ = seq;
  last_send_t_ = t;
  send_log_.emplace(seq, gen_ts);
}

AckOutcome Estimator::on_ack(double t, Seq seq) {
  if (seq == 0 || seq > s_)
    throw ProtocolError("estimator: ACK for unknown seq " + std::to_string(seq));
  if (seq <= n_hat_) return {};

  auto it = send_log_.find(seq);
  if (it == send_log_.end())
    throw ProtocolError("estimator: ACK for unknown seq " + std::to_string(seq));

  advance(t);
  const double gen = it->second;
  AckOutcome out;
  out.freshness = Freshness::fresh;
  out.rtt_sample = t - gen;
  if (fresh_acks_ == 0) {
    rtt_ewma_ = *out.rtt_sample;
    z_ewma_ = *out.rtt_sample;
  } else {
    out.z_sample = t - last_fresh_ack_;
    rtt_ewma_ = ewma(rtt_ewma_, *out.rtt_sample, cfg_.alpha);
    z_ewma_ = ewma(z_ewma_, *out.z_sample, cfg_.alpha);
  }
  ++fresh_acks_;
  last_fresh_ack_ = t;
  n_hat_ = seq;
  a_n_hat_ = gen;
  send_log_.erase(send_log_.begin(), std::next(it));
  return out;
}

double Estimator::age_at(double t) const {
  if (n_hat_ == 0) throw NoEstimateError("estimator: no in-sequence ACK yet");
  return t - a_n_hat_;
}

double Estimator::rtt_ewma() const {
  if (fresh_acks_ == 0) throw NoEstimateError("estimator: no RTT sample yet");
  return rtt_ewma_;
}

double Estimator::z_ewma() const {
  if (fresh_acks_ == 0) throw NoEstimateError("estimator: no ACK gap sample yet");
  return z_ewma_;
}

EpochStats Estimator::close_epoch(double t) {
  if (!(t > epoch_start_)) throw std::invalid_argument("estimator: zero-length epoch");
  advance(t);
  EpochStats st;
  st.start = epoch_start_;
  st.end = t;
  const double len = t - epoch_start_;
  st.b_bar = backlog_area_ / len;
  st.has_age = age_covered_ > 0.0;
  st.delta_bar = st.has_age ? age_area_ / age_covered_ : 0.0;
  st.backlog_now = static_cast<double>(backlog());
  if (previous_) {
    st.has_previous = true;
    st.delta_diff = st.delta_bar - previous_->delta_bar;
    st.b_diff = st.b_bar - previous_->b_bar;
  }
  previous_ = st;
  epoch_start_ = t;
  age_area_ = 0.0;
  age_covered_ = 0.0;
  backlog_area_ = 0.0;
  return st;
}

}  // namespace acp
