#include <doctest.h>

#include <random>

#include "acp/controller.hpp"
#include "controller_oracle.hpp"

using namespace acp;

TEST_CASE("first increase in both backlog and age decreases") {
  Controller c;
  const auto t = c.decide(0.5, 0.1, 3.0);
  CHECK(t.label() == "DEC");
  CHECK(t.b_star == -1.0);
  CHECK(c.flag() == 1);
  CHECK(c.gamma() == 0);
}

TEST_CASE("second consecutive increase switches to MDEC") {
  Controller c;
  c.set_state(1, 0);
  const auto t = c.decide(0.5, 0.1, 4.0);
  CHECK(t.label() == "MDEC(1)");
  CHECK(t.b_star == -2.0);
  CHECK(c.gamma() == 1);
}

TEST_CASE("mixed signs increase and reset") {
  Controller c;
  c.set_state(1, 3);
  const auto t = c.decide(-0.3, 0.2, 1.0);
  CHECK(t.label() == "INC");
  CHECK(t.b_star == 1.0);
  CHECK(c.flag() == 0);
  CHECK(c.gamma() == 0);

  c.set_state(1, 3);
  CHECK(c.decide(0.3, -0.2, 1.0).label() == "INC");
  CHECK(c.gamma() == 0);
}

TEST_CASE("zero changes count as decreases") {
  Controller c;
  CHECK(c.decide(0.0, 0.0, 2.0).label() == "DEC");
  CHECK(c.decide(0.0, 0.5, 2.0).label() == "INC");
  CHECK(c.decide(0.5, 0.0, 2.0).label() == "INC");
}

TEST_CASE("consecutive MDEC grows gamma up to the cap") {
  Controller c;
  c.decide(1.0, 1.0, 8.0);
  for (int g = 1; g <= 20; ++g) {
    const auto t = c.decide(1.0, 1.0, 8.0);
    const int expect = std::min(g, 16);
    CHECK(t.gamma_used == expect);
    CHECK(t.b_star == -(1.0 - std::pow(2.0, -expect)) * 8.0);
  }
  // A decrease in both keeps reusing the current gamma.
  const auto held = c.decide(-1.0, -1.0, 8.0);
  CHECK(held.label() == "MDEC(16)");
  CHECK(c.gamma() == 16);
}

TEST_CASE("MDEC magnitude grows with gamma and stays below the backlog") {
  for (int g = 0; g < 30; ++g) {
    CHECK(std::abs(mdec_target(g + 1, 5.0)) >= std::abs(mdec_target(g, 5.0)));
    CHECK(std::abs(mdec_target(g, 5.0)) <= 5.0);
  }
  CHECK(mdec_target(0, 5.0) == 0.0);
}

TEST_CASE("exhaustive decision table matches the reference") {
  const double signs[] = {-0.7, 0.0, 0.4};
  const double backlogs[] = {0.0, 1.0, 3.5, 12.0};
  int cells = 0;
  for (double b : signs)
    for (double d : signs)
      for (int flag = 0; flag <= 1; ++flag)
        for (int gamma = 0; gamma <= 8; ++gamma)
          for (double backlog : backlogs) {
            Controller c;
            c.set_state(flag, gamma);
            oracle::ReferenceState ref{flag, gamma};
            const auto got = c.decide(b, d, backlog);
            const auto want = oracle::reference_step(ref, b, d, backlog);
            INFO("b=" << b << " d=" << d << " flag=" << flag << " gamma=" << gamma);
            CHECK(got.label() == want.label);
            CHECK(got.b_star == want.b_star);
            CHECK(c.flag() == ref.flag);
            CHECK(c.gamma() == ref.gamma);
            ++cells;
          }
  CHECK(cells == 3 * 3 * 2 * 9 * 4);
}

TEST_CASE("random decision sequences match the reference") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> diff(-1.0, 1.0);
  Controller c;
  oracle::ReferenceState ref;
  for (int i = 0; i < 100000; ++i) {
    // Bias toward the first quadrant so long MDEC runs occur.
    double b = diff(rng), d = diff(rng);
    if (rng() % 3 == 0) b = std::abs(b), d = std::abs(d);
    if (rng() % 50 == 0) b = 0.0;
    const double backlog = static_cast<double>(rng() % 20);
    const auto got = c.decide(b, d, backlog);
    const auto want = oracle::reference_step(ref, b, d, backlog);
    REQUIRE(got.label() == want.label);
    REQUIRE(got.b_star == want.b_star);
  }
}

TEST_CASE("update_lambda examples") {
  CHECK(update_lambda(1.0, 0.1, 0.2, 13.0) == doctest::Approx(15.0));
  CHECK(update_lambda(1.0, 0.1, 0.2, 10.0) == doctest::Approx(12.5));
  CHECK(update_lambda(0.0, 0.1, 0.2, 10.0) == doctest::Approx(10.0));
  CHECK(update_lambda(-5.0, 0.1, 0.2, 10.0) == doctest::Approx(7.5));
  CHECK_THROWS_AS(update_lambda(1.0, 0.0, 0.2, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(update_lambda(1.0, 0.1, -0.2, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(update_lambda(1.0, 0.1, 0.2, 0.0), std::invalid_argument);
}

TEST_CASE("update_lambda stays inside the clamp band") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double z = 1e-3 + 2.0 * u(rng);
    const double rtt = 1e-3 + 2.0 * u(rng);
    const double prev = 0.01 + 100.0 * u(rng);
    const double b = -20.0 * u(rng) + (rng() % 2 ? 1.0 : 0.0);
    const double raw = 1.0 / z + b / rtt;
    const double got = update_lambda(b, z, rtt, prev);
    REQUIRE(got > 0.0);
    REQUIRE(got >= 0.75 * prev);
    REQUIRE(got <= 1.25 * prev);
    if (raw >= 0.75 * prev && raw <= 1.25 * prev) REQUIRE(got == raw);
    if (raw < 0.75 * prev) REQUIRE(got == 0.75 * prev);
    if (raw > 1.25 * prev) REQUIRE(got == 1.25 * prev);
  }
}

TEST_CASE("alternating INC/DEC with stationary Z stays bounded") {
  // Step 1/RTT is inside the clamp band, so lambda alternates between two values.
  double lambda = 10.0;
  for (int k = 0; k < 1000; ++k) {
    lambda = update_lambda(k % 2 ? -1.0 : 1.0, 1.0 / lambda, 1.0, lambda);
    REQUIRE(lambda >= 10.0);
    REQUIRE(lambda <= 11.0 + 1e-9);
  }
  // With both clamps binding every step the pair shrinks lambda by 0.9375
  // but it never grows or turns non-positive.
  lambda = 10.0;
  for (int k = 0; k < 1000; ++k) {
    const double next = update_lambda(k % 2 ? -1.0 : 1.0, 1.0 / lambda, 0.01, lambda);
    REQUIRE(next > 0.0);
    REQUIRE(next <= 12.5);
    lambda = next;
  }
}

TEST_CASE("epoch length") {
  CHECK(epoch_length(10.0) == 1.0);
  CHECK(epoch_length(5.0, 10) == 2.0);
  CHECK(epoch_length(13.0, 10) == doctest::Approx(10.0 / 13.0));
  CHECK_THROWS_AS(epoch_length(0.0), std::invalid_argument);
}
