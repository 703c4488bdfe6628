#include <doctest.h>

#include <string>

#include "acp/sim_config.hpp"

using namespace acp::sim;
using nlohmann::json;

namespace {

std::string error_of(const json& doc) {
  try {
    parse_sim_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

json minimal() {
  return json::parse(R"({"forward": [{"service": "exponential", "mu": 1}],
                         "lambda": 0.5, "duration": 100})");
}

}  // namespace

TEST_CASE("bundled configs load") {
  for (std::string name : {"mm1", "tandem", "tandem_closed_loop", "net_a", "net_b", "net_c",
                           "net_d", "net_e"}) {
    CAPTURE(name);
    const auto cfg = load_sim_config(std::string(ACP_CONFIG_DIR) + "/" + name + ".json");
    CHECK(cfg.name == name);
    if (cfg.mode == RunMode::fixed_rate || name.rfind("net_", 0) == 0) CHECK_FALSE(cfg.grid.empty());
  }
  const auto a = load_sim_config(std::string(ACP_CONFIG_DIR) + "/net_a.json");
  CHECK(a.mode == RunMode::closed_loop);
  REQUIRE(a.net.forward.size() == 6);
  REQUIRE(a.net.reverse.size() == 6);
  CHECK(a.net.reverse[3].rate_bps == a.net.forward[2].rate_bps);
  REQUIRE(a.net.cross.size() == 1);
  CHECK(a.net.cross[0].rate_bps == 2e5);

  const auto d = load_sim_config(std::string(ACP_CONFIG_DIR) + "/net_d.json");
  CHECK(d.net.forward[0].rate_bps == 5e6);
  CHECK(d.net.forward[5].rate_bps == 1e6);
  // Mirrored: the first ACK hop is the monitor's own link.
  CHECK(d.net.reverse[0].rate_bps == 1e6);
}

TEST_CASE("minimal document") {
  const auto cfg = parse_sim_config(minimal());
  CHECK(cfg.mode == RunMode::fixed_rate);
  CHECK(cfg.lambda == 0.5);
  CHECK(cfg.seed == 1);
  CHECK(cfg.run.warmup_fraction == 0.1);
  CHECK(cfg.net.forward.at(0).mu == 1.0);
}

TEST_CASE("errors name the offending field") {
  auto doc = minimal();
  doc["colour"] = "red";
  CHECK(error_of(doc).find("'colour'") != std::string::npos);

  doc = minimal();
  doc["forward"][0]["mu"] = -1;
  CHECK(error_of(doc).find("forward[0].mu") != std::string::npos);

  doc = minimal();
  doc["forward"][0]["rate"] = 3;
  CHECK(error_of(doc).find("forward[0].rate") != std::string::npos);

  doc = minimal();
  doc["source"] = {{"probe_count", 0}};
  CHECK(error_of(doc).find("source") != std::string::npos);

  doc = minimal();
  doc["mode"] = "closed_loop";
  CHECK(error_of(doc).find("reverse") != std::string::npos);

  doc = minimal();
  doc["cross_traffic"] = json::array({{{"entry", 3}, {"rate_bps", 1e5}}});
  CHECK(error_of(doc).find("cross_traffic[0].entry") != std::string::npos);

  doc = minimal();
  doc.erase("duration");
  CHECK(error_of(doc).find("duration") != std::string::npos);

  doc = minimal();
  doc.erase("duration");
  doc["updates"] = 1000;
  doc["mode"] = "closed_loop";
  doc["reverse"] = "mirror";
  CHECK(error_of(doc).find("'duration'") != std::string::npos);

  doc = minimal();
  doc["policy"] = "cubic";
  CHECK(error_of(doc).find("policy") != std::string::npos);

  doc = minimal();
  doc["grid"] = "0.5:0.1:0.1";
  CHECK(error_of(doc).find("grid") != std::string::npos);

  CHECK_THROWS_AS(load_sim_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("grid strings") {
  const auto g = parse_grid("0.1:0.9:0.1");
  REQUIRE(g.size() == 9);
  CHECK(g.front() == doctest::Approx(0.1));
  CHECK(g.back() == doctest::Approx(0.9));
  CHECK(parse_grid("1:1:1").size() == 1);
  CHECK_THROWS_AS(parse_grid("1:2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid("1:2:0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid("a:b:c"), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid("0:1:0.1"), std::invalid_argument);
}

TEST_CASE("update targets convert to durations") {
  CHECK(duration_for_updates(900, 0.5, 0.1) == doctest::Approx(2000.0));
  CHECK_THROWS_AS(duration_for_updates(10, 0.0, 0.1), std::invalid_argument);
}
