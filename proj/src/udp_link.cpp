#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <ctime>
#include <utility>

#include "acp/link.hpp"

namespace acp {
namespace {

sockaddr_in to_sockaddr(const Endpoint& ep) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  const std::string host = ep.host == "localhost" ? "127.0.0.1" : ep.host;
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    throw std::invalid_argument("bad IPv4 address '" + ep.host + "'");
  return addr;
}

[[noreturn]] void sys_fail(const std::string& what) {
  throw TransportError(what + ": " + std::strerror(errno));
}

int open_socket() {
  const int fd = ::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0);
  if (fd < 0) sys_fail("socket");
  return fd;
}

}  // namespace

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
    throw std::invalid_argument("expected host:port, got '" + text + "'");
  Endpoint ep;
  ep.host = text.substr(0, colon);
  const std::string port = text.substr(colon + 1);
  if (port.find_first_not_of("0123456789") != std::string::npos || port.size() > 5)
    throw std::invalid_argument("bad port in '" + text + "'");
  const unsigned long p = std::stoul(port);
  if (p > 65535) throw std::invalid_argument("port out of range in '" + text + "'");
  ep.port = static_cast<std::uint16_t>(p);
  (void)to_sockaddr(ep);
  return ep;
}

UdpLink UdpLink::connect(const Endpoint& peer) {
  const sockaddr_in addr = to_sockaddr(peer);
  const int fd = open_socket();
  UdpLink link(fd, true);
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0)
    sys_fail("connect " + peer.str());
  return link;
}

UdpLink UdpLink::bind(const Endpoint& local) {
  const sockaddr_in addr = to_sockaddr(local);
  const int fd = open_socket();
  UdpLink link(fd, false);
  if (::bind(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0)
    sys_fail("bind " + local.str());
  return link;
}

UdpLink::UdpLink(UdpLink&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)),
      connected_(other.connected_),
      have_peer_(other.have_peer_),
      last_peer_(std::move(other.last_peer_)),
      buffer_(std::move(other.buffer_)) {}

UdpLink& UdpLink::operator=(UdpLink&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(other.fd_, -1);
    connected_ = other.connected_;
    have_peer_ = other.have_peer_;
    last_peer_ = std::move(other.last_peer_);
    buffer_ = std::move(other.buffer_);
  }
  return *this;
}

UdpLink::~UdpLink() {
  if (fd_ >= 0) ::close(fd_);
}

double UdpLink::now() {
  timespec ts{};
  ::clock_gettime(CLOCK_MONOTONIC, &ts);
  return static_cast<double>(ts.tv_sec) + static_cast<double>(ts.tv_nsec) * 1e-9;
}

std::uint16_t UdpLink::local_port() const {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) sys_fail("getsockname");
  return ntohs(addr.sin_port);
}

void UdpLink::send(std::span<const std::uint8_t> bytes) {
  ssize_t n = -1;
  if (connected_) {
    n = ::send(fd_, bytes.data(), bytes.size(), 0);
  } else {
    if (!have_peer_) throw TransportError("send: no peer yet");
    n = ::sendto(fd_, bytes.data(), bytes.size(), 0,
                 reinterpret_cast<const sockaddr*>(last_peer_.data()),
                 static_cast<socklen_t>(last_peer_.size()));
  }
  if (n < 0) {
    // A loopback peer that is not listening yet reports ECONNREFUSED on the
    // next call; treat it like a lost datagram.
    if (errno == ECONNREFUSED || errno == EAGAIN || errno == ENOBUFS) return;
    sys_fail("send");
  }
}

std::optional<Datagram> UdpLink::receive_until(double deadline) {
  for (;;) {
    const double remaining = deadline - now();
    pollfd pfd{fd_, POLLIN, 0};
    int rc;
    if (!std::isfinite(deadline)) {
      rc = ::ppoll(&pfd, 1, nullptr, nullptr);
    } else {
      const double wait = remaining > 0.0 ? remaining : 0.0;
      timespec ts{};
      ts.tv_sec = static_cast<time_t>(wait);
      ts.tv_nsec = static_cast<long>((wait - static_cast<double>(ts.tv_sec)) * 1e9);
      rc = ::ppoll(&pfd, 1, &ts, nullptr);
    }
    if (rc < 0) {
      if (errno == EINTR) return std::nullopt;
      sys_fail("ppoll");
    }
    if (rc == 0) return std::nullopt;

    sockaddr_in from{};
    socklen_t from_len = sizeof from;
    const ssize_t n = ::recvfrom(fd_, buffer_.data(), buffer_.size(), 0,
                                 reinterpret_cast<sockaddr*>(&from), &from_len);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN || errno == ECONNREFUSED) {
        if (now() >= deadline) return std::nullopt;
        continue;
      }
      sys_fail("recvfrom");
    }
    Datagram d;
    d.arrival_time = now();
    d.bytes.assign(buffer_.begin(), buffer_.begin() + n);
    char ip[INET_ADDRSTRLEN] = {};
    ::inet_ntop(AF_INET, &from.sin_addr, ip, sizeof ip);
    d.peer = std::string(ip) + ":" + std::to_string(ntohs(from.sin_port));
    if (!connected_) {
      last_peer_.assign(reinterpret_cast<const std::uint8_t*>(&from),
                        reinterpret_cast<const std::uint8_t*>(&from) + from_len);
      have_peer_ = true;
    }
    return d;
  }
}

}  // namespace acp
