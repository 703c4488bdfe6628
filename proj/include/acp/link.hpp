#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace acp {

struct Datagram {
  std::vector<std::uint8_t> bytes;
  double arrival_time = 0.0;
  std::string peer;
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreliable datagram transport with its own clock (seconds).
class DatagramLink {
 public:
  virtual ~DatagramLink() = default;
  virtual double now() = 0;
  // Sends to the connected peer, or for a bound link to the most recent sender.
  virtual void send(std::span<const std::uint8_t> bytes) = 0;
  // Blocks until a datagram arrives or the clock reaches deadline.
  virtual std::optional<Datagram> receive_until(double deadline) = 0;
};

// One direction of a simulated path.
struct PathModel {
  enum class Delay { constant, exponential };
  Delay delay_kind = Delay::constant;
  double delay = 0.0;          // constant value or exponential mean, seconds
  double loss = 0.0;           // drop probability
  double reorder_prob = 0.0;   // probability of an extra hold-back
  double reorder_extra = 0.0;  // hold-back added to reordered datagrams
};

// Virtual-time duplex path whose far end is a responder function, usually a
// MonitorAgent. Datagrams are delayed independently, so jitter and the
// reorder hold-back produce out-of-order delivery. Deterministic given seed.
class SimulatedLink final : public DatagramLink {
 public:
  using Responder =
      std::function<std::optional<std::vector<std::uint8_t>>(double, std::span<const std::uint8_t>)>;

  SimulatedLink(PathModel forward, PathModel reverse, std::uint64_t seed, Responder responder);

  double now() override { return now_; }
  void send(std::span<const std::uint8_t> bytes) override;
  std::optional<Datagram> receive_until(double deadline) override;

  std::uint64_t dropped() const { return dropped_; }

 private:
  struct InFlight {
    double t;
    std::uint64_t order;
    bool to_far_end;
    std::vector<std::uint8_t> bytes;
    bool operator>(const InFlight& o) const {
      return t != o.t ? t > o.t : order > o.order;
    }
  };

  double draw_delay(const PathModel& m, std::mt19937_64& rng);
  void launch(double t, bool to_far_end, std::vector<std::uint8_t> bytes);

  PathModel forward_;
  PathModel reverse_;
  std::mt19937_64 fwd_rng_;
  std::mt19937_64 rev_rng_;
  Responder responder_;
  double now_ = 0.0;
  std::uint64_t order_ = 0;
  std::uint64_t dropped_ = 0;
  std::priority_queue<InFlight, std::vector<InFlight>, std::greater<>> pending_;
};

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
  std::string str() const { return host + ":" + std::to_string(port); }
};

// Parses "a.b.c.d:port" or "localhost:port"; throws std::invalid_argument.
Endpoint parse_endpoint(const std::string& text);

// Real UDP over IPv4. Clock is CLOCK_MONOTONIC in seconds.
class UdpLink final : public DatagramLink {
 public:
  static UdpLink connect(const Endpoint& peer);
  static UdpLink bind(const Endpoint& local);

  UdpLink(UdpLink&& other) noexcept;
  UdpLink& operator=(UdpLink&& other) noexcept;
  UdpLink(const UdpLink&) = delete;
  UdpLink& operator=(const UdpLink&) = delete;
  ~UdpLink() override;

  double now() override;
  void send(std::span<const std::uint8_t> bytes) override;
  std::optional<Datagram> receive_until(double deadline) override;

  std::uint16_t local_port() const;

 private:
  explicit UdpLink(int fd, bool connected) : fd_(fd), connected_(connected) {}

  int fd_ = -1;
  bool connected_ = false;
  bool have_peer_ = false;
  std::vector<std::uint8_t> last_peer_;  // sockaddr_in bytes
  std::vector<std::uint8_t> buffer_ = std::vector<std::uint8_t>(70000);
};

}  // namespace acp
