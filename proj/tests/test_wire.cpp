#include <doctest.h>

#include <random>

#include "acp/wire.hpp"

using namespace acp;

namespace {

UpdatePacket random_update(std::mt19937_64& rng) {
  UpdatePacket p;
  p.seq = static_cast<std::uint32_t>(rng());
  p.gen_ts_us = rng();
  // Mostly small payloads, occasionally up to the limit.
  const std::size_t len = rng() % 512 == 0 ? rng() % (kMaxPayload + 1) : rng() % 64;
  p.payload.resize(len);
  for (auto& b : p.payload) b = static_cast<std::uint8_t>(rng());
  return p;
}

}  // namespace

TEST_CASE("zero update encodes to a 16-byte frame") {
  const auto bytes = encode_update(UpdatePacket{});
  REQUIRE(bytes.size() == 16);
  CHECK(bytes[0] == 0xAC);
  CHECK(bytes[1] == 0x50);
  CHECK(bytes[2] == 1);
  CHECK(bytes[3] == 0);
  for (std::size_t i = 4; i < 16; ++i) CHECK(bytes[i] == 0);
  CHECK(decode_update(bytes) == UpdatePacket{});
}

TEST_CASE("header fields are big-endian") {
  UpdatePacket p;
  p.seq = 0x01020304;
  p.gen_ts_us = 0x1122334455667788ULL;
  p.payload = {0xEE, 0xFF};
  const std::vector<std::uint8_t> expected = {0xAC, 0x50, 0x01, 0x00, 0x01, 0x02, 0x03, 0x04, 0x11,
                                              0x22, 0x33, 0x44, 0x55, 0x66, 0x77, 0x88, 0xEE, 0xFF};
  CHECK(encode_update(p) == expected);

  AckPacket a{kWireVersion, 7, 123};
  const std::vector<std::uint8_t> ack = {0xAC, 0x50, 0x01, 0x01, 0, 0, 0, 7, 0, 0, 0, 0, 0, 0, 0, 123};
  CHECK(encode_ack(a) == ack);
  CHECK(decode_ack(ack) == a);
}

TEST_CASE("zero ACK round-trips") {
  const auto bytes = encode_ack(AckPacket{});
  CHECK(bytes.size() == 16);
  CHECK(decode_ack(bytes) == AckPacket{});
}

TEST_CASE("oversize payload is rejected") {
  UpdatePacket p;
  p.payload.resize(kMaxPayload + 1);
  CHECK_THROWS_AS(encode_update(p), WireError);
  try {
    encode_update(p);
  } catch (const WireError& e) {
    CHECK(e.code() == WireErrc::oversize_payload);
  }
  p.payload.resize(kMaxPayload);
  CHECK(encode_update(p).size() == kHeaderSize + kMaxPayload);
}

TEST_CASE("decode errors are distinct") {
  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const WireError& e) {
      return e.code();
    }
    FAIL("no error raised");
    return WireErrc::short_buffer;
  };
  const auto update = encode_update(UpdatePacket{1, 5, 9, {1, 2, 3}});
  const auto ack = encode_ack(AckPacket{1, 5, 9});

  std::vector<std::uint8_t> truncated(update.begin(), update.begin() + 10);
  CHECK(code_of([&] { decode_update(truncated); }) == WireErrc::short_buffer);
  CHECK(code_of([&] { decode_update(ack); }) == WireErrc::kind_mismatch);
  CHECK(code_of([&] { decode_ack(update); }) == WireErrc::kind_mismatch);

  auto bad_magic = update;
  bad_magic[1] = 0x51;
  CHECK(code_of([&] { decode_update(bad_magic); }) == WireErrc::bad_magic);

  auto bad_version = update;
  bad_version[2] = 2;
  CHECK(code_of([&] { decode_update(bad_version); }) == WireErrc::bad_version);

  auto bad_kind = update;
  bad_kind[3] = 7;
  CHECK(code_of([&] { decode_update(bad_kind); }) == WireErrc::kind_mismatch);

  auto long_ack = ack;
  long_ack.push_back(0);
  CHECK(code_of([&] { decode_ack(long_ack); }) == WireErrc::length_mismatch);

  std::vector<std::uint8_t> huge(kHeaderSize + kMaxPayload + 1, 0);
  std::copy(update.begin(), update.begin() + kHeaderSize, huge.begin());
  CHECK(code_of([&] { decode_update(huge); }) == WireErrc::length_mismatch);
}

TEST_CASE("random updates and ACKs round-trip bit-exactly") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 100000; ++i) {
    const UpdatePacket p = random_update(rng);
    const auto bytes = encode_update(p);
    REQUIRE(bytes.size() == kHeaderSize + p.payload.size());
    REQUIRE(decode_update(bytes) == p);
    REQUIRE(encode_update(decode_update(bytes)) == bytes);

    const AckPacket a{kWireVersion, static_cast<std::uint32_t>(rng()), rng()};
    const auto ab = encode_ack(a);
    REQUIRE(ab.size() == kHeaderSize);
    REQUIRE(decode_ack(ab) == a);
  }
}

TEST_CASE("garbage input never escapes as anything but WireError") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 20000; ++i) {
    std::vector<std::uint8_t> junk(rng() % 40);
    for (auto& b : junk) b = static_cast<std::uint8_t>(rng());
    // Give the header a fair chance of being valid.
    if (junk.size() >= 4 && rng() % 2) {
      junk[0] = kMagic0;
      junk[1] = kMagic1;
      junk[2] = kWireVersion;
      junk[3] = static_cast<std::uint8_t>(rng() % 3);
    }
    try {
      (void)decode_update(junk);
    } catch (const WireError&) {
    }
    try {
      (void)decode_ack(junk);
    } catch (const WireError&) {
    }
  }
}
