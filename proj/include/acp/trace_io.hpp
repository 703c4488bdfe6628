#pragma once

#include <cstdint>
#include <fstream>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "acp/monitor.hpp"
#include "acp/simkit.hpp"
#include "acp/source.hpp"

namespace acp {

// {epoch, t, lambda, delta_bar, b_bar, action, rtt_ewma, z_ewma}
nlohmann::json to_json(const EpochRecord& r);
// {t, age_reset, seq}
nlohmann::json to_json(const MonitorRecord& r);
nlohmann::json to_json(const SourceSummary& s);

namespace sim {
nlohmann::json to_json(const AoiMetrics& m);
nlohmann::json to_json(const ClosedLoopResult& r);
// Header "lambda,avg_age,ci_halfwidth".
void write_sweep_csv(std::ostream& out, std::span<const CurvePoint> curve);
}  // namespace sim

// Appends one compact JSON document per line, flushing each record so a
// trace survives an interrupted run.
class JsonLinesWriter {
 public:
  explicit JsonLinesWriter(const std::string& path);
  void write(const nlohmann::json& record);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
};

// 64-bit FNV-1a, hex encoded. Used as the config digest in run manifests.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace acp
