#include <doctest.h>

#include <random>

#include "acp/estimator.hpp"
#include "trace_oracle.hpp"

using acp::Estimator;
using acp::Freshness;

TEST_CASE("single exchange") {
  Estimator est;
  est.on_send(0.0, 1, 0.0);
  CHECK(est.backlog() == 1);
  const auto out = est.on_ack(0.2, 1);
  CHECK(out.fresh());
  CHECK(*out.rtt_sample == doctest::Approx(0.2));
  CHECK_FALSE(out.z_sample);
  CHECK(est.age_at(0.2) == doctest::Approx(0.2));
  CHECK(est.age_at(1.2) == doctest::Approx(1.2));
  CHECK(est.backlog() == 0);
  CHECK(est.rtt_ewma() == doctest::Approx(0.2));
  CHECK(est.z_ewma() == doctest::Approx(0.2));
}

TEST_CASE("out-of-sequence ACK does not reset the age") {
  Estimator est;
  est.on_send(0.0, 1, 0.0);
  est.on_send(0.1, 2, 0.1);
  est.on_send(0.2, 3, 0.2);
  const auto first = est.on_ack(0.5, 3);
  CHECK(first.fresh());
  CHECK(est.acked() == 3);
  CHECK(est.backlog() == 0);
  CHECK(est.age_at(0.5) == doctest::Approx(0.3));
  CHECK(est.send_log_size() == 0);

  const double rtt = est.rtt_ewma();
  const auto second = est.on_ack(0.6, 2);
  CHECK(second.freshness == Freshness::stale);
  CHECK_FALSE(second.rtt_sample);
  CHECK(est.acked() == 3);
  CHECK(est.backlog() == 0);
  CHECK(est.age_at(0.6) == doctest::Approx(0.4));
  CHECK(est.rtt_ewma() == rtt);
}

TEST_CASE("fresh ACK prunes everything at or below it") {
  Estimator est;
  for (acp::Seq s = 1; s <= 5; ++s) est.on_send(s * 0.1, s, s * 0.1);
  CHECK(est.send_log_size() == 5);
  est.on_ack(1.0, 3);
  CHECK(est.send_log_size() == 2);
  CHECK(est.backlog() == 2);
}

TEST_CASE("queries before any fresh ACK fail") {
  Estimator est;
  est.on_send(0.0, 1, 0.0);
  CHECK_THROWS_AS(est.age_at(1.0), acp::NoEstimateError);
  CHECK_THROWS_AS(est.rtt_ewma(), acp::NoEstimateError);
  CHECK_THROWS_AS(est.z_ewma(), acp::NoEstimateError);
}

TEST_CASE("protocol violations are reported") {
  Estimator est;
  CHECK_THROWS_AS(est.on_ack(0.1, 1), acp::ProtocolError);
  est.on_send(1.0, 1, 1.0);
  CHECK_THROWS_AS(est.on_send(1.1, 3, 1.1), acp::ProtocolError);
  CHECK_THROWS_AS(est.on_send(0.5, 2, 0.5), acp::ProtocolError);
  CHECK_THROWS_AS(est.close_epoch(0.0), std::invalid_argument);
  CHECK_THROWS_AS(Estimator({0.0}), std::invalid_argument);
}

TEST_CASE("constant backlog averages to itself") {
  Estimator est;
  est.on_send(0.0, 1, 0.0);
  est.on_send(0.0, 2, 0.0);
  const auto st = est.close_epoch(5.0);
  CHECK(st.b_bar == doctest::Approx(2.0));
  CHECK_FALSE(st.has_age);
  CHECK_FALSE(st.has_previous);
  CHECK(st.backlog_now == 2.0);
}

TEST_CASE("sawtooth age averages to reset value plus half the period") {
  const double r = 0.3, p = 0.5;
  Estimator est;
  est.on_send(0.0, 1, 0.0);
  est.on_ack(r, 1);
  est.close_epoch(r);
  for (acp::Seq k = 1; k <= 20; ++k) {
    est.on_send(k * p, k + 1, k * p);
    est.on_ack(k * p + r, k + 1);
  }
  const auto st = est.close_epoch(20 * p + r);
  CHECK(st.delta_bar == doctest::Approx(r + p / 2).epsilon(1e-12));
  CHECK(st.has_previous);
}

TEST_CASE("epoch differences track the previous epoch") {
  Estimator est;
  est.on_send(0.0, 1, 0.0);
  est.on_ack(0.1, 1);
  const auto a = est.close_epoch(1.0);
  est.on_send(1.0, 2, 1.0);
  const auto b = est.close_epoch(2.0);
  CHECK(b.b_diff == doctest::Approx(b.b_bar - a.b_bar));
  CHECK(b.delta_diff == doctest::Approx(b.delta_bar - a.delta_bar));
  CHECK(b.b_bar == doctest::Approx(1.0));
}

TEST_CASE("EWMA recurrences") {
  CHECK(acp::ewma(2.0, 10.0, 1.0) == 10.0);
  CHECK(acp::ewma(2.0, 10.0, 0.25) == doctest::Approx(4.0));

  double avg = 5.0;
  for (int i = 0; i < 200; ++i) avg = acp::ewma(avg, 0.7, 0.25);
  CHECK(avg == doctest::Approx(0.7).epsilon(1e-12));

  Estimator est({1.0});
  est.on_send(0.0, 1, 0.0);
  est.on_ack(0.3, 1);
  est.on_send(0.5, 2, 0.5);
  const auto out = est.on_ack(1.0, 2);
  CHECK(*out.z_sample == doctest::Approx(0.7));
  CHECK(est.rtt_ewma() == doctest::Approx(0.5));
  CHECK(est.z_ewma() == doctest::Approx(0.7));

  Estimator slow({0.25});
  slow.on_send(0.0, 1, 0.0);
  slow.on_ack(0.3, 1);
  slow.on_send(0.5, 2, 0.5);
  slow.on_ack(1.0, 2);
  CHECK(slow.rtt_ewma() == doctest::Approx(0.75 * 0.3 + 0.25 * 0.5));
  CHECK(slow.z_ewma() == doctest::Approx(0.75 * 0.3 + 0.25 * 0.7));
}

TEST_CASE("random traces match the event-replay oracle") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 10000; ++i) {
    const auto tr = oracle::random_trace(rng, 5 + static_cast<int>(rng() % 40));
    const auto bad = oracle::replay_mismatch(tr);
    if (bad) FAIL_CHECK("trace " << i << ": " << *bad);
  }
}

TEST_CASE("epoch integrals match dense 1 us integration") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 20; ++i) {
    const auto tr = oracle::random_trace(rng, 30);
    Estimator est({}, tr.start);
    double start = tr.start;
    for (const auto& e : tr.events) {
      if (e.kind == oracle::Kind::send) est.on_send(e.t, e.seq, tr.gen[e.seq]);
      if (e.kind == oracle::Kind::ack) est.on_ack(e.t, e.seq);
      if (e.kind != oracle::Kind::close) continue;
      const auto st = est.close_epoch(e.t);
      const auto ref = oracle::integrate_dense(tr, start, e.t);
      CHECK(oracle::close_rel(st.b_bar, ref.b_bar(e.t - start), 1e-6));
      CHECK(oracle::close_rel(st.delta_bar, ref.delta_bar(), 1e-6));
      start = e.t;
    }
  }
}
