#include "acp/trace_io.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace acp {

using nlohmann::json;

json to_json(const EpochRecord& r) {
  return json{{"epoch", r.epoch},        {"t", r.t},           {"lambda", r.lambda},
              {"delta_bar", r.delta_bar}, {"b_bar", r.b_bar},   {"action", r.action},
              {"rtt_ewma", r.rtt_ewma},   {"z_ewma", r.z_ewma}};
}

json to_json(const MonitorRecord& r) {
  return json{{"t", r.t}, {"age_reset", r.age_reset}, {"seq", r.seq}};
}

json to_json(const SourceSummary& s) {
  return json{{"avg_age_estimate", s.avg_age_estimate},
              {"avg_backlog_estimate", s.avg_backlog_estimate},
              {"avg_lambda", s.avg_lambda},
              {"avg_rtt", s.avg_rtt},
              {"ack_rate", s.ack_rate},
              {"epochs", s.epochs},
              {"elapsed", s.elapsed}};
}

namespace sim {

json to_json(const AoiMetrics& m) {
  json nodes = json::array();
  for (const auto& n : m.nodes) {
    nodes.push_back(json{{"avg_backlog", n.avg_backlog},
                         {"avg_occupancy", n.avg_occupancy},
                         {"mean_sojourn", n.mean_sojourn},
                         {"update_arrival_rate", n.update_arrival_rate},
                         {"update_arrivals", n.update_arrivals},
                         {"update_departures", n.update_departures},
                         {"offered_load", n.utilization_offered}});
  }
  return json{{"avg_age", m.avg_age},
              {"ci_halfwidth", m.ci_halfwidth},
              {"avg_backlog_total", m.avg_backlog_total},
              {"nodes", nodes},
              {"avg_system_time", m.avg_system_time},
              {"avg_rtt", m.avg_rtt},
              {"throughput_ups", m.throughput_ups},
              {"throughput_bps", m.throughput_bps},
              {"delivered", m.delivered},
              {"generated", m.generated},
              {"fairness", m.fairness},
              {"unstable", m.unstable},
              {"est_avg_age", m.est_avg_age},
              {"est_avg_backlog", m.est_avg_backlog},
              {"avg_lambda", m.avg_lambda}};
}

json to_json(const ClosedLoopResult& r) {
  json per = json::array();
  for (const auto& m : r.per_source) {
    json j = to_json(m);
    j.erase("nodes");
    per.push_back(std::move(j));
  }
  return json{{"aggregate", to_json(r.aggregate)}, {"per_source", per}, {"fairness", r.fairness}};
}

void write_sweep_csv(std::ostream& out, std::span<const CurvePoint> curve) {
  out << "lambda,avg_age,ci_halfwidth\n";
  char line[128];
  for (const auto& p : curve) {
    std::snprintf(line, sizeof line, "%.10g,%.10g,%.10g\n", p.lambda, p.avg_age, p.ci_halfwidth);
    out << line;
  }
}

}  // namespace sim

JsonLinesWriter::JsonLinesWriter(const std::string& path) : path_(path), out_(path, std::ios::trunc) {
  if (!out_) throw std::runtime_error("cannot open '" + path + "' for writing");
}

void JsonLinesWriter::write(const json& record) {
  out_ << record.dump() << '\n';
  out_.flush();
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace acp
