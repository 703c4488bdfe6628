#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace acp {

// Frame layout (all integers big-endian):
//
//   0      2        3       4          8                16
//   +------+--------+-------+----------+----------------+-----------
//   | 0xAC | ver=1  | kind  |   seq    |  timestamp_us  | payload...
//   | 0x50 |        |       |  uint32  |     uint64     | (updates only)
//   +------+--------+-------+----------+----------------+-----------
//
// kind is 0 for an update and 1 for an ACK. An ACK echoes the seq and
// generation timestamp of the update it acknowledges. The payload length
// is implied by the datagram length.

inline constexpr std::uint8_t kMagic0 = 0xAC;
inline constexpr std::uint8_t kMagic1 = 0x50;
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kHeaderSize = 16;
inline constexpr std::size_t kMaxPayload = 65000;

enum class FrameKind : std::uint8_t { update = 0, ack = 1 };

struct UpdatePacket {
  std::uint8_t version = kWireVersion;
  std::uint32_t seq = 0;
  std::uint64_t gen_ts_us = 0;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const UpdatePacket&, const UpdatePacket&) = default;
};

struct AckPacket {
  std::uint8_t version = kWireVersion;
  std::uint32_t seq = 0;
  std::uint64_t echo_ts_us = 0;

  friend bool operator==(const AckPacket&, const AckPacket&) = default;
};

enum class WireErrc {
  oversize_payload,
  short_buffer,
  bad_magic,
  bad_version,
  kind_mismatch,
  length_mismatch,
};

const char* to_string(WireErrc e) noexcept;

class WireError : public std::runtime_error {
 public:
  explicit WireError(WireErrc code)
      : std::runtime_error(std::string("wire: ") + to_string(code)), code_(code) {}
  WireErrc code() const noexcept { return code_; }

 private:
  WireErrc code_;
};

std::vector<std::uint8_t> encode_update(const UpdatePacket& p);
UpdatePacket decode_update(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_ack(const AckPacket& a);
AckPacket decode_ack(std::span<const std::uint8_t> bytes);

// Returns the kind of a frame after validating magic, version and minimum
// length. Throws WireError for anything that is not a well-formed header.
FrameKind peek_kind(std::span<const std::uint8_t> bytes);

}  // namespace acp
