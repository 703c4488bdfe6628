#include <doctest.h>

#include <cmath>

#include "acp/analytics.hpp"
#include "acp/simkit.hpp"
#include "acp/trace_io.hpp"

using namespace acp::sim;

namespace {

QueueNetwork chain(std::vector<ServiceSpec> fwd) {
  QueueNetwork n;
  n.name = "test";
  n.forward = std::move(fwd);
  return n;
}

QueueNetwork tandem(double mu1, double mu2) {
  return chain({ServiceSpec::exponential(mu1), ServiceSpec::exponential(mu2)});
}

// Freshest-wins age integrated exactly over [w0, w1] from a delivery log.
double reconstruct_age(const std::vector<Delivery>& log, double w0, double w1) {
  double area = 0.0;
  bool have = false;
  std::uint32_t best = 0;
  double z = 0.0, last = 0.0;
  auto add = [&](double from, double to) {
    from = std::max(from, w0);
    to = std::min(to, w1);
    if (to > from) area += ((to - z) * (to - z) - (from - z) * (from - z)) / 2.0;
  };
  for (const auto& d : log) {
    if (have && d.seq <= best) continue;
    if (have) add(last, d.delivered);
    have = true;
    best = d.seq;
    z = d.gen;
    last = d.delivered;
  }
  if (have) add(last, w1);
  return area / (w1 - w0);
}

}  // namespace

TEST_CASE("periodic updates into a matched deterministic server age 1.5 service times") {
  const auto net = chain({ServiceSpec::deterministic(0.25)});
  const auto m = run_fixed_rate(net, 4.0, Arrival::periodic, 1000.0, 1);
  CHECK(m.avg_age == doctest::Approx(1.5 * 0.25).epsilon(1e-9));
  CHECK(m.nodes.at(0).avg_backlog == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("M/M/1 age agrees with the closed form") {
  const double lambda = 0.53;
  const auto net = chain({ServiceSpec::exponential(1.0)});
  const double duration = 1e6 / lambda / 0.9;
  const auto m = run_fixed_rate(net, lambda, Arrival::poisson, duration, 3);
  CHECK(m.delivered >= 990000);
  const double exact = acp::analytics::aoi_mm1(lambda, 1.0);
  CHECK(std::abs(m.avg_age - exact) / exact <= 0.02);
  CHECK(m.ci_halfwidth > 0.0);
  CHECK(m.ci_halfwidth < 0.02 * exact);
}

TEST_CASE("Little's law holds at every station") {
  const auto net = tandem(1.0, 1.5);
  const auto m = run_fixed_rate(net, 0.6, Arrival::poisson, 3e5, 4);
  for (const auto& node : m.nodes) {
    const double little = node.update_arrival_rate * node.mean_sojourn;
    CHECK(node.avg_backlog == doctest::Approx(little).epsilon(0.02));
  }
  // M/M/1 stations in tandem: B = rho / (1 - rho).
  CHECK(m.nodes[0].avg_backlog == doctest::Approx(0.6 / 0.4).epsilon(0.05));
  CHECK(m.nodes[1].avg_backlog == doctest::Approx(0.4 / 0.6).epsilon(0.05));
}

TEST_CASE("flow is conserved between stations") {
  auto net = chain({ServiceSpec::exponential(2.0), ServiceSpec::exponential(1.5),
                    ServiceSpec::exponential(3.0)});
  const auto m = run_fixed_rate(net, 1.0, Arrival::poisson, 5e4, 5);
  REQUIRE(m.nodes.size() == 3);
  for (std::size_t j = 1; j < m.nodes.size(); ++j)
    CHECK(m.nodes[j].update_arrivals == m.nodes[j - 1].update_departures);
  CHECK(m.nodes[0].update_arrivals >= m.nodes[0].update_departures);
}

TEST_CASE("throughput equals the offered rate without cross traffic") {
  const auto net = tandem(1.0, 1.0);
  const auto m = run_fixed_rate(net, 0.4, Arrival::poisson, 2e5, 6);
  CHECK(m.throughput_ups == doctest::Approx(0.4).epsilon(0.01));
  CHECK(net.update_bytes() == 1024 + 16 + 28);
  CHECK(m.throughput_bps == doctest::Approx(m.throughput_ups * net.update_bytes() * 8));
  CHECK_FALSE(m.unstable);
}

TEST_CASE("sink age is reconstructible from the delivery log") {
  RunOptions opts;
  opts.record_deliveries = true;
  const double duration = 2e4;
  const auto m = run_fixed_rate(tandem(1.0, 2.0), 0.5, Arrival::poisson, duration, 8, opts);
  REQUIRE(!m.deliveries.empty());
  const double ref = reconstruct_age(m.deliveries, 0.1 * duration, duration);
  CHECK(m.avg_age == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("cross traffic loads the links") {
  auto net = chain({ServiceSpec::link(1e6), ServiceSpec::link(1e6)});
  const auto quiet = run_fixed_rate(net, 20.0, Arrival::poisson, 500.0, 2);
  net.cross.push_back(CrossFlow{0, 1, 5e5, 1000});
  const auto busy = run_fixed_rate(net, 20.0, Arrival::poisson, 500.0, 2);
  CHECK(busy.avg_age > quiet.avg_age);
  CHECK(busy.nodes[0].avg_occupancy > busy.nodes[0].avg_backlog);
  CHECK(quiet.nodes[0].avg_occupancy == doctest::Approx(quiet.nodes[0].avg_backlog));
}

TEST_CASE("overload is flagged") {
  const auto m = run_fixed_rate(tandem(1.0, 1.0), 1.2, Arrival::poisson, 1000.0, 1);
  CHECK(m.unstable);
  const auto ok = run_fixed_rate(tandem(1.0, 1.0), 0.9, Arrival::poisson, 1000.0, 1);
  CHECK_FALSE(ok.unstable);
}

TEST_CASE("fixed-rate runs are deterministic in the seed") {
  const auto net = tandem(1.0, 1.0);
  const auto a = to_json(run_fixed_rate(net, 0.5, Arrival::poisson, 2e4, 10)).dump();
  const auto b = to_json(run_fixed_rate(net, 0.5, Arrival::poisson, 2e4, 10)).dump();
  const auto c = to_json(run_fixed_rate(net, 0.5, Arrival::poisson, 2e4, 11)).dump();
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("sweeps are deterministic and independent of the worker count") {
  const auto net = tandem(1.0, 1.0);
  const std::vector<double> grid = {0.2, 0.4, 0.6, 0.8};
  SweepOptions opts;
  opts.target_updates = 20000;
  opts.workers = 1;
  const auto one = sweep_lambda(net, grid, 3, opts);
  opts.workers = 3;
  const auto three = sweep_lambda(net, grid, 3, opts);
  REQUIRE(one.curve.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(one.curve[i].lambda == grid[i]);
    CHECK(one.curve[i].avg_age == three.curve[i].avg_age);
    CHECK(one.curve[i].ci_halfwidth == three.curve[i].ci_halfwidth);
  }
  CHECK(one.best_lambda == three.best_lambda);
  double best = 1e300;
  for (const auto& p : one.curve) best = std::min(best, p.avg_age);
  CHECK(one.best_age == best);
  CHECK_THROWS(sweep_lambda(net, std::vector<double>{}, 3, opts));
}

TEST_CASE("closed-loop runs need a reverse path") {
  const auto net = tandem(1.0, 1.0);
  CHECK_THROWS_AS(run_closed_loop(net, acp::Policy::acp_plus(), 1, 100.0, 1), ConfigError);
  CHECK_NOTHROW(net.validate(false));
}

TEST_CASE("network validation") {
  QueueNetwork empty;
  CHECK_THROWS_AS(empty.validate(false), ConfigError);
  auto bad = tandem(1.0, 0.0);
  CHECK_THROWS_AS(bad.validate(false), ConfigError);
  auto cross = tandem(1.0, 1.0);
  cross.cross.push_back(CrossFlow{1, 0, 1e5, 100});
  CHECK_THROWS_AS(cross.validate(false), ConfigError);
}

TEST_CASE("closed-loop ACP+ over a link chain") {
  QueueNetwork net = chain(std::vector<ServiceSpec>(3, ServiceSpec::link(1e6)));
  net.reverse = net.forward;
  net.cross.push_back(CrossFlow{0, 2, 2e5, 1000});
  ClosedLoopOptions opts;
  const auto r = run_closed_loop(net, acp::Policy::acp_plus(), 2, 200.0, 4, opts);
  REQUIRE(r.per_source.size() == 2);
  REQUIRE(r.epochs.size() == 2);
  for (const auto& s : r.per_source) {
    CHECK(s.delivered > 100);
    CHECK(s.avg_age > 0.0);
    CHECK(s.est_avg_age >= s.avg_age * 0.9);
    CHECK(s.avg_rtt > 0.0);
  }
  CHECK(r.fairness > 0.5);
  CHECK(r.fairness <= 1.0);
  CHECK(r.aggregate.nodes.size() == 3);
  for (const auto& ep : r.epochs[0]) {
    CHECK(ep.lambda >= 0.75 * ep.rate_used * (1 - 1e-12));
    CHECK(ep.lambda <= 1.25 * ep.rate_used * (1 + 1e-12));
  }
  const auto again = run_closed_loop(net, acp::Policy::acp_plus(), 2, 200.0, 4, opts);
  CHECK(to_json(again).dump() == to_json(r).dump());
}

TEST_CASE("Jain index") {
  const std::vector<double> three = {1, 2, 3};
  CHECK(jain_index(three) == doctest::Approx(6.0 / 7.0));
  const std::vector<double> equal(5, 2.5);
  CHECK(jain_index(equal) == doctest::Approx(1.0));
  const std::vector<double> one = {0, 0, 4, 0};
  CHECK(jain_index(one) == doctest::Approx(0.25));
  CHECK_THROWS(jain_index(std::vector<double>{}));
  CHECK_THROWS(jain_index(std::vector<double>{0, 0}));
  CHECK_THROWS(jain_index(std::vector<double>{1, -1}));
}
