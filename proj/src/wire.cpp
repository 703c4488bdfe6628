#include "acp/wire.hpp"

#include <algorithm>

namespace acp {
namespace {

void put_u32(std::uint8_t* out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) {
    out[i] = static_cast<std::uint8_t>(v & 0xFF);
    v >>= 8;
  }
}

void put_u64(std::uint8_t* out, std::uint64_t v) {
  for (int i = 7; i >= 0; --i) {
    out[i] = static_cast<std::uint8_t>(v & 0xFF);
    v >>= 8;
  }
}

std::uint32_t get_u32(const std::uint8_t* in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | in[i];
  return v;
}

std::uint64_t get_u64(const std::uint8_t* in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | in[i];
  return v;
}

void write_header(std::uint8_t* out, std::uint8_t version, FrameKind kind,
                  std::uint32_t seq, std::uint64_t ts) {
  out[0] = kMagic0;
  out[1] = kMagic1;
  out[2] = version;
  out[3] = static_cast<std::uint8_t>(kind);
  put_u32(out + 4, seq);
  put_u64(out + 8, ts);
}

// Validates the common header and the expected kind.
void check_header(std::span<const std::uint8_t> b, FrameKind expected) {
  if (peek_kind(b) != expected) throw WireError(WireErrc::kind_mismatch);
}

}  // namespace

const char* to_string(WireErrc e) noexcept {
  switch (e) {
    case WireErrc::oversize_payload: return "payload exceeds 65000 bytes";
    case WireErrc::short_buffer: return "buffer shorter than header";
    case WireErrc::bad_magic: return "bad magic";
    case WireErrc::bad_version: return "unsupported version";
    case WireErrc::kind_mismatch: return "frame kind mismatch";
    case WireErrc::length_mismatch: return "frame length mismatch";
  }
  return "unknown";
}

FrameKind peek_kind(std::span<const std::uint8_t> b) {
  if (b.size() < kHeaderSize) throw WireError(WireErrc::short_buffer);
  if (b[0] != kMagic0 || b[1] != kMagic1) throw WireError(WireErrc::bad_magic);
  if (b[2] != kWireVersion) throw WireError(WireErrc::bad_version);
  switch (b[3]) {
    case 0: return FrameKind::update;
    case 1: return FrameKind::ack;
    default: throw WireError(WireErrc::kind_mismatch);
  }
}

std::vector<std::uint8_t> encode_update(const UpdatePacket& p) {
  if (p.payload.size() > kMaxPayload) throw WireError(WireErrc::oversize_payload);
  if (p.version != kWireVersion) throw WireError(WireErrc::bad_version);
  std::vector<std::uint8_t> out(kHeaderSize + p.payload.size());
  write_header(out.data(), p.version, FrameKind::update, p.seq, p.gen_ts_us);
  std::copy(p.payload.begin(), p.payload.end(), out.begin() + kHeaderSize);
  return out;
}

UpdatePacket decode_update(std::span<const std::uint8_t> b) {
  check_header(b, FrameKind::update);
  if (b.size() > kHeaderSize + kMaxPayload) throw WireError(WireErrc::length_mismatch);
  UpdatePacket p;
  p.version = b[2];
  p.seq = get_u32(b.data() + 4);
  p.gen_ts_us = get_u64(b.data() + 8);
  p.payload.assign(b.begin() + kHeaderSize, b.end());
  return p;
}

std::vector<std::uint8_t> encode_ack(const AckPacket& a) {
  if (a.version != kWireVersion) throw WireError(WireErrc::bad_version);
  std::vector<std::uint8_t> out(kHeaderSize);
  write_header(out.data(), a.version, FrameKind::ack, a.seq, a.echo_ts_us);
  return out;
}

AckPacket decode_ack(std::span<const std::uint8_t> b) {
  check_header(b, FrameKind::ack);
  if (b.size() != kHeaderSize) throw WireError(WireErrc::length_mismatch);
  AckPacket a;
  a.version = b[2];
  a.seq = get_u32(b.data() + 4);
  a.echo_ts_us = get_u64(b.data() + 8);
  return a;
}

}  // namespace acp
