#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "acp/simkit.hpp"
#include "acp/source.hpp"

namespace acp::sim {

enum class RunMode { fixed_rate, closed_loop };

// A simulation job as read from a JSON document. See configs/README.md for
// the schema.
struct SimConfig {
  std::string name;
  QueueNetwork net;
  RunMode mode = RunMode::fixed_rate;
  double lambda = 0.0;
  Arrival arrival = Arrival::poisson;
  Policy policy;
  int sources = 1;
  double duration = 0.0;
  std::uint64_t target_updates = 0;
  std::uint64_t seed = 1;
  RunOptions run;
  SourceConfig source;
  double start_spread = 1.0;
  std::vector<double> grid;  // default sweep grid
};

QueueNetwork parse_network(const nlohmann::json& doc);
SimConfig parse_sim_config(const nlohmann::json& doc);
SimConfig load_sim_config(const std::string& path);

// Duration giving roughly `updates` deliveries in the measurement window.
double duration_for_updates(std::uint64_t updates, double lambda, double warmup_fraction);

// "lo:hi:step" inclusive of hi within half a step; throws on bad input.
std::vector<double> parse_grid(const std::string& text);

}  // namespace acp::sim
