#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "acp/sim_config.hpp"
#include "acp/wire.hpp"

namespace acp::sim {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError("config field '" + field + "': " + what);
}

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.count(it.key()))
      fail(where.empty() ? it.key() : where + "." + it.key(), "unknown field");
  }
}

double number(const json& obj, const std::string& key, const std::string& path) {
  const auto& v = obj.at(key);
  if (!v.is_number()) fail(path, "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(path, "must be finite");
  return x;
}

double positive(const json& obj, const std::string& key, const std::string& path) {
  const double x = number(obj, key, path);
  if (!(x > 0.0)) fail(path, "must be > 0");
  return x;
}

double non_negative(const json& obj, const std::string& key, const std::string& path) {
  const double x = number(obj, key, path);
  if (x < 0.0) fail(path, "must be >= 0");
  return x;
}

std::uint64_t count(const json& obj, const std::string& key, const std::string& path) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) fail(path, "must be a non-negative integer");
  return v.get<std::uint64_t>();
}

std::string text(const json& obj, const std::string& key, const std::string& path) {
  const auto& v = obj.at(key);
  if (!v.is_string()) fail(path, "must be a string");
  return v.get<std::string>();
}

ServiceSpec parse_service(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "must be an object");
  if (!j.contains("service")) fail(path + ".service", "missing");
  const std::string kind = text(j, "service", path + ".service");
  ServiceSpec s;
  if (kind == "exponential") {
    reject_unknown(j, path, {"service", "mu", "prop_delay"});
    if (!j.contains("mu")) fail(path + ".mu", "missing");
    s = ServiceSpec::exponential(positive(j, "mu", path + ".mu"));
  } else if (kind == "deterministic") {
    reject_unknown(j, path, {"service", "time", "prop_delay"});
    if (!j.contains("time")) fail(path + ".time", "missing");
    s = ServiceSpec::deterministic(positive(j, "time", path + ".time"));
  } else if (kind == "link") {
    reject_unknown(j, path, {"service", "rate_bps", "prop_delay"});
    if (!j.contains("rate_bps")) fail(path + ".rate_bps", "missing");
    s = ServiceSpec::link(positive(j, "rate_bps", path + ".rate_bps"));
  } else if (kind == "instant") {
    reject_unknown(j, path, {"service", "prop_delay"});
    s = ServiceSpec::instant();
  } else {
    fail(path + ".service", "expected exponential, deterministic, link or instant");
  }
  if (j.contains("prop_delay")) s.prop_delay = non_negative(j, "prop_delay", path + ".prop_delay");
  return s;
}

std::vector<ServiceSpec> parse_chain(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "must be an array");
  std::vector<ServiceSpec> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(parse_service(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace

void QueueNetwork::validate(bool closed_loop) const {
  if (forward.empty()) fail("forward", "at least one station is required");
  if (closed_loop && reverse.empty()) fail("reverse", "closed-loop runs need a reverse chain");
  auto check = [](const ServiceSpec& s, const std::string& path) {
    switch (s.kind) {
      case ServiceKind::exponential:
        if (!(s.mu > 0.0)) fail(path + ".mu", "must be > 0");
        break;
      case ServiceKind::deterministic:
        if (!(s.time > 0.0)) fail(path + ".time", "must be > 0");
        break;
      case ServiceKind::link:
        if (!(s.rate_bps > 0.0)) fail(path + ".rate_bps", "must be > 0");
        break;
      case ServiceKind::instant: break;
    }
    if (s.prop_delay < 0.0) fail(path + ".prop_delay", "must be >= 0");
  };
  for (std::size_t i = 0; i < forward.size(); ++i) check(forward[i], "forward[" + std::to_string(i) + "]");
  for (std::size_t i = 0; i < reverse.size(); ++i) check(reverse[i], "reverse[" + std::to_string(i) + "]");
  for (std::size_t j = 0; j < cross.size(); ++j) {
    const auto& f = cross[j];
    const std::string path = "cross_traffic[" + std::to_string(j) + "]";
    if (f.entry < 0 || f.entry >= static_cast<int>(forward.size())) fail(path + ".entry", "out of range");
    if (f.exit < f.entry || f.exit >= static_cast<int>(forward.size())) fail(path + ".exit", "out of range");
    if (f.rate_bps < 0.0) fail(path + ".rate_bps", "must be >= 0");
    if (f.packet_bytes == 0) fail(path + ".packet_bytes", "must be > 0");
  }
  if (payload_bytes > kMaxPayload) fail("payload_bytes", "must be <= 65000");
  if (ack_bytes == 0) fail("ack_bytes", "must be > 0");
}

QueueNetwork parse_network(const json& doc) {
  QueueNetwork net;
  if (doc.contains("name")) net.name = text(doc, "name", "name");
  if (!doc.contains("forward")) fail("forward", "missing");
  net.forward = parse_chain(doc.at("forward"), "forward");
  if (doc.contains("reverse")) {
    const auto& r = doc.at("reverse");
    if (r.is_string()) {
      if (r.get<std::string>() != "mirror") fail("reverse", "expected an array or \"mirror\"");
      net.reverse.assign(net.forward.rbegin(), net.forward.rend());
    } else {
      net.reverse = parse_chain(r, "reverse");
    }
  }
  if (doc.contains("cross_traffic")) {
    const auto& c = doc.at("cross_traffic");
    if (!c.is_array()) fail("cross_traffic", "must be an array");
    for (std::size_t j = 0; j < c.size(); ++j) {
      const std::string path = "cross_traffic[" + std::to_string(j) + "]";
      const json& f = c[j];
      if (!f.is_object()) fail(path, "must be an object");
      reject_unknown(f, path, {"entry", "exit", "rate_bps", "packet_bytes"});
      CrossFlow flow;
      for (const char* key : {"entry", "rate_bps"})
        if (!f.contains(key)) fail(path + "." + key, "missing");
      flow.entry = static_cast<int>(count(f, "entry", path + ".entry"));
      flow.exit = f.contains("exit") ? static_cast<int>(count(f, "exit", path + ".exit"))
                                     : static_cast<int>(net.forward.size()) - 1;
      flow.rate_bps = non_negative(f, "rate_bps", path + ".rate_bps");
      if (f.contains("packet_bytes"))
        flow.packet_bytes = static_cast<std::uint32_t>(count(f, "packet_bytes", path + ".packet_bytes"));
      net.cross.push_back(flow);
    }
  }
  if (doc.contains("payload_bytes"))
    net.payload_bytes = static_cast<std::uint32_t>(count(doc, "payload_bytes", "payload_bytes"));
  if (doc.contains("overhead_bytes"))
    net.overhead_bytes = static_cast<std::uint32_t>(count(doc, "overhead_bytes", "overhead_bytes"));
  if (doc.contains("ack_bytes"))
    net.ack_bytes = static_cast<std::uint32_t>(count(doc, "ack_bytes", "ack_bytes"));
  return net;
}

SimConfig parse_sim_config(const json& doc) {
  if (!doc.is_object()) fail("<root>", "must be an object");
  reject_unknown(doc, "",
                 {"name", "forward", "reverse", "cross_traffic", "payload_bytes", "overhead_bytes",
                  "ack_bytes", "mode", "lambda", "arrival", "policy", "sources", "duration",
                  "updates", "seed", "warmup_fraction", "batches", "source", "start_spread",
                  "grid"});
  SimConfig cfg;
  cfg.net = parse_network(doc);
  cfg.name = cfg.net.name;
  if (doc.contains("mode")) {
    const std::string m = text(doc, "mode", "mode");
    if (m == "fixed_rate") cfg.mode = RunMode::fixed_rate;
    else if (m == "closed_loop") cfg.mode = RunMode::closed_loop;
    else fail("mode", "expected fixed_rate or closed_loop");
  }
  if (doc.contains("lambda")) cfg.lambda = positive(doc, "lambda", "lambda");
  if (doc.contains("arrival")) {
    const std::string a = text(doc, "arrival", "arrival");
    if (a == "poisson") cfg.arrival = Arrival::poisson;
    else if (a == "periodic") cfg.arrival = Arrival::periodic;
    else fail("arrival", "expected poisson or periodic");
  }
  if (doc.contains("policy")) {
    try {
      cfg.policy = Policy::parse(text(doc, "policy", "policy"));
    } catch (const std::invalid_argument& e) {
      fail("policy", e.what());
    }
  }
  if (doc.contains("sources")) {
    cfg.sources = static_cast<int>(count(doc, "sources", "sources"));
    if (cfg.sources < 1) fail("sources", "must be >= 1");
  }
  if (doc.contains("duration")) cfg.duration = positive(doc, "duration", "duration");
  if (doc.contains("updates")) cfg.target_updates = count(doc, "updates", "updates");
  if (doc.contains("seed")) cfg.seed = count(doc, "seed", "seed");
  if (doc.contains("warmup_fraction")) {
    cfg.run.warmup_fraction = non_negative(doc, "warmup_fraction", "warmup_fraction");
    if (cfg.run.warmup_fraction >= 1.0) fail("warmup_fraction", "must be < 1");
  }
  if (doc.contains("batches")) {
    cfg.run.batches = static_cast<int>(count(doc, "batches", "batches"));
    if (cfg.run.batches < 1 || cfg.run.batches > 1000) fail("batches", "must be in [1, 1000]");
  }
  if (doc.contains("start_spread")) cfg.start_spread = non_negative(doc, "start_spread", "start_spread");
  if (doc.contains("source")) {
    const json& s = doc.at("source");
    if (!s.is_object()) fail("source", "must be an object");
    reject_unknown(s, "source", {"probe_count", "probe_timeout", "eta", "alpha", "mdec_backlog"});
    if (s.contains("probe_count")) cfg.source.probe_count = static_cast<int>(count(s, "probe_count", "source.probe_count"));
    if (s.contains("probe_timeout")) cfg.source.probe_timeout = positive(s, "probe_timeout", "source.probe_timeout");
    if (s.contains("eta")) cfg.source.eta = static_cast<int>(count(s, "eta", "source.eta"));
    if (s.contains("alpha")) cfg.source.alpha = positive(s, "alpha", "source.alpha");
    if (s.contains("mdec_backlog")) {
      const std::string m = text(s, "mdec_backlog", "source.mdec_backlog");
      if (m == "instantaneous") cfg.source.mdec_backlog = MdecBacklog::instantaneous;
      else if (m == "average") cfg.source.mdec_backlog = MdecBacklog::average;
      else fail("source.mdec_backlog", "expected instantaneous or average");
    }
  }
  if (doc.contains("grid")) {
    const json& g = doc.at("grid");
    if (g.is_string()) {
      try {
        cfg.grid = parse_grid(g.get<std::string>());
      } catch (const std::invalid_argument& e) {
        fail("grid", e.what());
      }
    } else if (g.is_array()) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g[i].is_number() || !(g[i].get<double>() > 0.0))
          fail("grid[" + std::to_string(i) + "]", "must be a positive number");
        cfg.grid.push_back(g[i].get<double>());
      }
    } else {
      fail("grid", "expected \"lo:hi:step\" or an array");
    }
  }

  cfg.net.validate(cfg.mode == RunMode::closed_loop);
  cfg.source.payload_size = cfg.net.payload_bytes;
  cfg.source.policy = cfg.policy;
  try {
    cfg.source.validate();
  } catch (const std::invalid_argument& e) {
    fail("source", e.what());
  }
  if (cfg.duration == 0.0 && cfg.target_updates == 0) fail("duration", "either duration or updates is required");
  if (cfg.mode == RunMode::closed_loop && cfg.duration == 0.0)
    fail("duration", "closed-loop runs need a duration");
  if (cfg.mode == RunMode::fixed_rate && cfg.lambda == 0.0 && cfg.grid.empty())
    fail("lambda", "fixed_rate runs need lambda (or a grid for sweeps)");
  if (cfg.mode == RunMode::closed_loop && cfg.duration == 0.0)
    fail("duration", "closed_loop runs need a duration");
  return cfg;
}

SimConfig load_sim_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_sim_config(doc);
}

double duration_for_updates(std::uint64_t updates, double lambda, double warmup_fraction) {
  if (!(lambda > 0.0)) throw std::invalid_argument("duration_for_updates: lambda must be > 0");
  return static_cast<double>(updates) / (lambda * (1.0 - warmup_fraction));
}

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw std::invalid_argument("bad grid '" + spec + "'");
    parts.push_back(v);
  }
  if (parts.size() != 3) throw std::invalid_argument("grid must be lo:hi:step, got '" + spec + "'");
  const double lo = parts[0], hi = parts[1], step = parts[2];
  if (!(lo > 0.0) || !(hi >= lo) || !(step > 0.0))
    throw std::invalid_argument("grid needs 0 < lo <= hi and step > 0, got '" + spec + "'");
  std::vector<double> grid;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 0.5));
  for (std::size_t i = 0; i <= n; ++i) {
    // Round to 12 significant decimals so 0.1 + 3 * 0.01 prints cleanly.
    const double v = lo + static_cast<double>(i) * step;
    grid.push_back(std::round(v * 1e12) / 1e12);
  }
  return grid;
}

}  // namespace acp::sim
