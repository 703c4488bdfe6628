#include <csignal>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "acp/analytics.hpp"
#include "acp/drivers.hpp"
#include "acp/sim_config.hpp"
#include "acp/simkit.hpp"
#include "acp/trace_io.hpp"
#include "acp/wire.hpp"

#ifndef ACP_VERSION
#define ACP_VERSION "0.0.0"
#endif

namespace {

using nlohmann::json;
namespace an = acp::analytics;

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

// Bad flags, addresses, configs or parameters; exits with kUsage.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

void install_signal_handlers() {
  struct sigaction sa{};
  sa.sa_handler = on_signal;
  sigemptyset(&sa.sa_mask);
  sa.sa_flags = 0;  // no SA_RESTART, so blocking receives wake up
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);
}

acp::Endpoint endpoint_arg(const std::string& text, const char* flag) {
  try {
    return acp::parse_endpoint(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string(flag) + ": " + e.what());
  }
}

std::vector<double> grid_arg(const std::string& text, const char* flag) {
  try {
    return acp::sim::parse_grid(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string(flag) + ": " + e.what());
  }
}

std::string wall_clock() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

acp::sim::SimConfig load_config(const std::string& path) {
  try {
    return acp::sim::load_sim_config(path);
  } catch (const acp::sim::ConfigError& e) {
    throw UsageError(e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out.flush()) throw std::runtime_error("write to '" + path + "' failed");
}

std::string manifest_path(const std::string& out) { return out + ".manifest.json"; }

std::string base_name(const std::string& path) {
  return std::filesystem::path(path).filename().string();
}

struct Manifest {
  std::string command;
  std::string config;
  std::string digest;
  std::uint64_t seed = 0;
  std::string started;
  std::vector<std::string> outputs;

  void write(const std::string& path) const {
    json m = {{"command", command},  {"config", config},
              {"config_digest", digest}, {"seed", seed},
              {"version", ACP_VERSION},  {"started", started},
              {"finished", wall_clock()}, {"outputs", outputs}};
    write_text(path, m.dump(2) + "\n");
  }
};

// --- monitor ---------------------------------------------------------------

struct MonitorArgs {
  std::string bind;
  std::string trace;
  double duration = 0.0;
};

int cmd_monitor(const MonitorArgs& a) {
  const acp::Endpoint local = endpoint_arg(a.bind, "--bind");
  std::optional<acp::JsonLinesWriter> trace;
  if (!a.trace.empty()) trace.emplace(a.trace);
  auto link = acp::UdpLink::bind(local);
  std::fprintf(stderr, "listening on %s:%u\n", local.host.c_str(),
               static_cast<unsigned>(link.local_port()));
  install_signal_handlers();
  const double limit = a.duration > 0.0 ? a.duration : std::numeric_limits<double>::infinity();
  const auto report = acp::run_monitor(
      link, g_stop,
      [&](const acp::MonitorRecord& r) {
        if (trace) trace->write(acp::to_json(r));
      },
      limit);
  std::printf("accepted=%llu discarded=%llu malformed=%llu peers=%llu\n",
              static_cast<unsigned long long>(report.counters.accepted),
              static_cast<unsigned long long>(report.counters.discarded),
              static_cast<unsigned long long>(report.counters.malformed),
              static_cast<unsigned long long>(report.peers));
  return kOk;
}

// --- source ----------------------------------------------------------------

struct SourceArgs {
  std::string peer;
  std::string policy = "acp_plus";
  std::size_t payload = 1024;
  double duration = 60.0;
  std::string trace;
  int eta = 10;
  double alpha = 0.25;
  int probes = 10;
  double probe_timeout = 1.0;
  bool quiet = false;
};

int cmd_source(const SourceArgs& a) {
  const acp::Endpoint peer = endpoint_arg(a.peer, "--peer");
  acp::SourceConfig cfg;
  try {
    cfg.policy = acp::Policy::parse(a.policy);
    cfg.payload_size = a.payload;
    cfg.eta = a.eta;
    cfg.alpha = a.alpha;
    cfg.probe_count = a.probes;
    cfg.probe_timeout = a.probe_timeout;
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (!(a.duration > 0.0)) throw UsageError("--duration must be > 0");

  std::optional<acp::JsonLinesWriter> trace;
  if (!a.trace.empty()) trace.emplace(a.trace);
  auto link = acp::UdpLink::connect(peer);
  const auto run = acp::run_source(link, cfg, a.duration, [&](const acp::EpochRecord& r) {
    if (trace) trace->write(acp::to_json(r));
    if (!a.quiet)
      std::fprintf(stderr, "epoch %d t=%.3f lambda=%.4f %s\n", r.epoch, r.t, r.lambda,
                   r.action.c_str());
  }, /*keep_epochs=*/false);

  json summary = acp::to_json(run.summary);
  summary["policy"] = cfg.policy.label();
  summary["initial_lambda"] = run.initial_lambda;
  summary["sent"] = run.counters.sent;
  summary["acks"] = run.counters.acks;
  summary["stale_acks"] = run.counters.stale;
  summary["throughput_bps"] =
      run.summary.elapsed > 0.0
          ? run.summary.avg_lambda * static_cast<double>(cfg.payload_size + acp::kHeaderSize) * 8.0
          : 0.0;
  std::printf("%s\n", summary.dump(2).c_str());
  if (run.summary.epochs == 0)
    std::fprintf(stderr, "warning: no control epoch completed; averages need a run longer than eta/lambda\n");
  if (run.error) {
    std::fprintf(stderr, "transport error: %s\n", run.error->c_str());
    return kRuntime;
  }
  return kOk;
}

// --- sim -------------------------------------------------------------------

struct SimArgs {
  std::string config;
  std::string out;
  std::string trace;
  std::optional<std::uint64_t> seed;
};

int cmd_sim(const SimArgs& a) {
  const std::string raw = read_file(a.config);
  acp::sim::SimConfig cfg = load_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (cfg.mode == acp::sim::RunMode::fixed_rate && !(cfg.lambda > 0.0))
    throw UsageError("config has no lambda; use the sweep command for grid-only configs");

  Manifest manifest{"sim", a.config, acp::fnv1a_hex(raw), cfg.seed, wall_clock(), {a.out}};
  if (!a.trace.empty()) manifest.outputs.push_back(a.trace);

  json result;
  std::vector<std::string> trace_lines;
  if (cfg.mode == acp::sim::RunMode::fixed_rate) {
    const double duration =
        cfg.target_updates > 0
            ? acp::sim::duration_for_updates(cfg.target_updates, cfg.lambda, cfg.run.warmup_fraction)
            : cfg.duration;
    const auto m = acp::sim::run_fixed_rate(cfg.net, cfg.lambda, cfg.arrival, duration, cfg.seed,
                                            cfg.run);
    result = acp::sim::to_json(m);
    result["duration"] = duration;
  } else {
    acp::sim::ClosedLoopOptions opts;
    opts.run = cfg.run;
    opts.source = cfg.source;
    opts.start_spread = cfg.start_spread;
    opts.keep_epochs = !a.trace.empty();
    const auto r =
        acp::sim::run_closed_loop(cfg.net, cfg.policy, cfg.sources, cfg.duration, cfg.seed, opts);
    result = acp::sim::to_json(r);
    result["duration"] = cfg.duration;
    for (std::size_t s = 0; s < r.epochs.size(); ++s)
      for (const auto& e : r.epochs[s]) {
        json line = acp::to_json(e);
        line["source"] = s;
        trace_lines.push_back(line.dump());
      }
  }

  json doc = {{"manifest", base_name(manifest_path(a.out))},
              {"config_digest", manifest.digest},
              {"name", cfg.name},
              {"seed", cfg.seed},
              {"result", result}};
  manifest.write(manifest_path(a.out));
  write_text(a.out, doc.dump() + "\n");
  if (!a.trace.empty()) {
    std::string text;
    for (const auto& l : trace_lines) text += l + "\n";
    write_text(a.trace, text);
  }
  std::printf("%s\n", doc["result"].dump(2).c_str());
  return kOk;
}

// --- sweep -----------------------------------------------------------------

struct SweepArgs {
  std::string config;
  std::string grid;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> updates;
  unsigned workers = 0;
};

int cmd_sweep(const SweepArgs& a) {
  const std::string raw = read_file(a.config);
  acp::sim::SimConfig cfg = load_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  const std::vector<double> grid = a.grid.empty() ? cfg.grid : grid_arg(a.grid, "--grid");
  if (grid.empty()) throw UsageError("empty grid: pass --grid lo:hi:step or set \"grid\" in the config");

  acp::sim::SweepOptions opts;
  opts.run = cfg.run;
  opts.arrival = cfg.arrival;
  opts.duration = cfg.duration;
  opts.target_updates = a.updates ? *a.updates : cfg.target_updates;
  opts.workers = a.workers;
  if (opts.target_updates == 0 && !(opts.duration > 0.0))
    throw UsageError("sweep needs --updates or a duration in the config");

  Manifest manifest{"sweep", a.config, acp::fnv1a_hex(raw), cfg.seed, wall_clock(), {a.out}};
  const auto res = acp::sim::sweep_lambda(cfg.net, grid, cfg.seed, opts);
  manifest.write(manifest_path(a.out));
  std::ostringstream csv;
  acp::sim::write_sweep_csv(csv, res.curve);
  write_text(a.out, csv.str());
  std::printf("best_lambda=%.10g best_age=%.10g points=%zu\n", res.best_lambda, res.best_age,
              res.curve.size());
  return kOk;
}

// --- analyze ---------------------------------------------------------------

struct AnalyzeArgs {
  double mu = 1.0;
  double mu1 = 1.0;
  double mu2 = 1.0;
  std::optional<double> lambda;
  std::string sweep;
  std::string variant = "standard";
  bool mm1 = false;
};

int emit_curve(const std::function<double(double)>& fn, const std::string& sweep) {
  const auto grid = grid_arg(sweep, "--sweep");
  const auto curve = an::age_curve(fn, grid);
  an::write_age_curve_csv(std::cout, curve);
  return kOk;
}

int cmd_analyze_mm1(const AnalyzeArgs& a) {
  auto fn = [mu = a.mu](double l) { return an::aoi_mm1(l, mu); };
  if (!a.sweep.empty()) return emit_curve(fn, a.sweep);
  if (!a.lambda) throw UsageError("mm1 needs --lambda or --sweep");
  std::printf("%.10g\n", fn(*a.lambda));
  return kOk;
}

int cmd_analyze_tandem(const AnalyzeArgs& a) {
  std::function<double(double)> fn;
  if (a.variant == "standard") {
    fn = [&a](double l) { return an::aoi_tandem({l, a.mu1, a.mu2}); };
  } else if (a.variant == "cubic_cross" || a.variant == "linear_wait2") {
    const auto v = a.variant == "cubic_cross" ? an::TandemVariant::cubic_cross
                                              : an::TandemVariant::linear_wait2;
    fn = [&a, v](double l) { return an::aoi_tandem_variant({l, a.mu1, a.mu2}, v); };
  } else {
    throw UsageError("--variant must be standard, cubic_cross or linear_wait2");
  }
  if (!a.sweep.empty()) return emit_curve(fn, a.sweep);
  if (!a.lambda) throw UsageError("tandem needs --lambda or --sweep");
  std::printf("%.10g\n", fn(*a.lambda));
  return kOk;
}

int cmd_analyze_optimum(const AnalyzeArgs& a) {
  an::Optimum opt;
  double per = 0.0;
  if (a.mm1) {
    opt = an::optimal_lambda_mm1(a.mu);
    per = opt.lambda * an::mm1_system_time(opt.lambda, a.mu);
  } else {
    opt = an::optimal_lambda_tandem(a.mu1, a.mu2);
    per = opt.lambda * an::tandem_system_time({opt.lambda, a.mu1, a.mu2});
  }
  std::printf("lambda=%.10g age=%.10g updates_per_system_time=%.10g\n", opt.lambda, opt.age, per);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Age-control transport endpoints, queueing simulator and AoI calculator"};
  app.set_version_flag("--version", ACP_VERSION);
  app.require_subcommand(1);
  app.allow_extras(false);

  std::function<int()> action;

  MonitorArgs mon;
  auto* monitor = app.add_subcommand("monitor", "Receive updates over UDP and ACK the fresh ones");
  monitor->add_option("--bind", mon.bind, "Local address, e.g. 0.0.0.0:9000")->required();
  monitor->add_option("--trace", mon.trace, "JSON-lines file of age resets {t, age_reset, seq}");
  monitor->add_option("--duration", mon.duration, "Stop after this many seconds (default: until SIGINT)")
      ->check(CLI::NonNegativeNumber);
  monitor->callback([&] { action = [&] { return cmd_monitor(mon); }; });

  SourceArgs src;
  auto* source = app.add_subcommand("source", "Send status updates to a monitor over UDP");
  source->add_option("--peer", src.peer, "Monitor address, e.g. 127.0.0.1:9000")->required();
  source->add_option("--policy", src.policy, "acp_plus, lazy or fixed:<rate>")->capture_default_str();
  source->add_option("--payload", src.payload, "Update payload in bytes (max 65000)")
      ->capture_default_str();
  source->add_option("--duration", src.duration, "Run time in seconds")->capture_default_str();
  source->add_option("--trace", src.trace, "JSON-lines file of per-epoch records");
  source->add_option("--eta", src.eta, "Updates per control epoch")->capture_default_str();
  source->add_option("--alpha", src.alpha, "EWMA weight for RTT and ACK gap")->capture_default_str();
  source->add_option("--probes", src.probes, "Initialization exchanges")->capture_default_str();
  source->add_option("--probe-timeout", src.probe_timeout, "Seconds to wait for each probe ACK")
      ->capture_default_str();
  source->add_flag("--quiet", src.quiet, "Do not log epochs to stderr");
  source->callback([&] { action = [&] { return cmd_source(src); }; });

  SimArgs sim;
  auto* simc = app.add_subcommand("sim", "Run one simulation described by a JSON config");
  simc->add_option("config", sim.config, "Config file (see configs/README.md)")->required();
  simc->add_option("--out", sim.out, "Metrics file (one JSON line); manifest goes to <out>.manifest.json")
      ->required();
  simc->add_option("--trace", sim.trace, "JSON-lines file of per-epoch records (closed loop)");
  simc->add_option("--seed", sim.seed, "Override the config seed");
  simc->callback([&] { action = [&] { return cmd_sim(sim); }; });

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Fixed-rate age over a grid of update rates");
  sweep->add_option("config", sw.config, "Config file (see configs/README.md)")->required();
  sweep->add_option("--grid", sw.grid, "lo:hi:step (default: the config's grid)");
  sweep->add_option("--out", sw.out, "CSV file lambda,avg_age,ci_halfwidth")->required();
  sweep->add_option("--seed", sw.seed, "Override the config seed");
  sweep->add_option("--updates", sw.updates, "Deliveries per grid point in the measurement window");
  sweep->add_option("--workers", sw.workers, "Parallel runs (0: one per core)")->capture_default_str();
  sweep->callback([&] { action = [&] { return cmd_sweep(sw); }; });

  AnalyzeArgs an_args;
  auto* analyze = app.add_subcommand("analyze", "Closed-form age of information");
  analyze->require_subcommand(1);
  auto* mm1 = analyze->add_subcommand("mm1", "Age of an M/M/1 queue");
  mm1->add_option("--mu", an_args.mu, "Service rate")->capture_default_str();
  mm1->add_option("--lambda", an_args.lambda, "Update rate");
  mm1->add_option("--sweep", an_args.sweep, "lo:hi:step; prints a lambda,age CSV");
  mm1->callback([&] { action = [&] { return cmd_analyze_mm1(an_args); }; });
  auto* tandem = analyze->add_subcommand("tandem", "Age of two M/M/1 queues in tandem");
  tandem->add_option("--mu1", an_args.mu1, "First service rate")->capture_default_str();
  tandem->add_option("--mu2", an_args.mu2, "Second service rate")->capture_default_str();
  tandem->add_option("--lambda", an_args.lambda, "Update rate");
  tandem->add_option("--sweep", an_args.sweep, "lo:hi:step; prints a lambda,age CSV");
  tandem->add_option("--variant", an_args.variant, "standard, cubic_cross or linear_wait2")
      ->capture_default_str();
  tandem->callback([&] { action = [&] { return cmd_analyze_tandem(an_args); }; });
  auto* optimum = analyze->add_subcommand("optimum", "Age-minimizing update rate");
  optimum->add_flag("--mm1", an_args.mm1, "Single queue with rate --mu (default: tandem)");
  optimum->add_option("--mu", an_args.mu, "Service rate for --mm1")->capture_default_str();
  optimum->add_option("--mu1", an_args.mu1, "First tandem service rate")->capture_default_str();
  optimum->add_option("--mu2", an_args.mu2, "Second tandem service rate")->capture_default_str();
  optimum->callback([&] { action = [&] { return cmd_analyze_optimum(an_args); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    return action ? action() : kUsage;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const an::DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const acp::InitFailure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
}
