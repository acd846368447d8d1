#include <catch_amalgamated.hpp>

#include <random>

#include "fixtures.hpp"
#include "wristhap/protocol.hpp"

using namespace wristhap;
using namespace wristhap::protocol;
using Bytes = std::vector<std::uint8_t>;

namespace {

std::vector<StreamDecoder::Item> drain(StreamDecoder& d) {
  std::vector<StreamDecoder::Item> out;
  while (auto item = d.next()) out.push_back(std::move(*item));
  return out;
}

}  // namespace

TEST_CASE("encode: handshake frame layout", "[protocol]") {
  const Bytes f = encode_message(Handshake{1});
  CHECK(f == Bytes{0x48, 0x54, 0x02, 0x00, 0x01, 0x01, 0x00, 0x00});
  CHECK(f.size() == 2 + 2 + 1 + 2 + 1);
}

TEST_CASE("encode: little-endian fields and payload sizes", "[protocol]") {
  const Bytes f = encode_message(ErrorMsg{0x1234});
  CHECK(f[5] == 0x34);
  CHECK(f[6] == 0x12);
  CHECK(f[7] == (0x7F ^ 0x34 ^ 0x12));

  const Bytes fw = encode_message(FireWeapon{2, 1.0});
  REQUIRE(fw.size() == kFrameOverhead + 9);
  CHECK(fw[5] == 2);
  // 1.0 = 0x3FF0000000000000
  CHECK(Bytes(fw.begin() + 6, fw.begin() + 14) == Bytes{0, 0, 0, 0, 0, 0, 0xF0, 0x3F});

  std::mt19937_64 rng(1);
  for (int k = 0; k < 200; ++k) {
    const auto m = fixtures::random_message(rng);
    const auto bytes = encode_message(m);
    REQUIRE(bytes.size() == kFrameOverhead + *payload_size(static_cast<std::uint8_t>(msg_id(m))));
  }
}

TEST_CASE("encode: invalid messages are refused", "[protocol]") {
  CHECK_THROWS_AS(encode_message(FireWeapon{3, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(encode_message(ShieldImpact{1.5f, 0.0f, 0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(encode_message(ShieldImpact{0.0f, 0.0f, 2, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(encode_message(SetTorque{0.0f, -1.0f}), std::invalid_argument);
  CHECK_THROWS_AS(encode_message(Vibrate{0.0f, 1.0f, 1.0f}), std::invalid_argument);
  CHECK_THROWS_AS(encode_message(FireWeapon{0, -1.0}), std::invalid_argument);
}

TEST_CASE("decode(encode(m)) == m for every variant", "[protocol]") {
  TraceRow row;
  row.t = 1.5;
  row.desired = {0.1, -0.2};
  row.actual = {{1, 2, 3}};
  row.saturated = {true, false, true};
  const std::vector<Message> all{Handshake{1},
                                 HandshakeAck{7},
                                 FireWeapon{1, 2.5},
                                 ShieldImpact{-0.5f, 0.75f, 1, 3.25},
                                 SetTorque{90.0f, 0.25f},
                                 Vibrate{40.0f, 0.1f, 0.5f},
                                 Telemetry{row},
                                 ErrorMsg{4}};
  for (const auto& m : all) {
    const auto bytes = encode_message(m);
    const auto r = decode_message(bytes);
    REQUIRE(r.status == DecodeStatus::ok);
    CHECK(r.consumed == bytes.size());
    CHECK(*r.message == m);
  }
}

TEST_CASE("1e5 seeded messages round-trip through the stream decoder", "[protocol]") {
  std::mt19937_64 rng(0xC0DEC);
  std::vector<Message> sent;
  Bytes stream;
  for (int k = 0; k < 100000; ++k) {
    sent.push_back(fixtures::random_message(rng));
    const auto f = encode_message(sent.back());
    REQUIRE(wire::checksum(f[4], std::span(f).subspan(kHeaderSize, f.size() - kFrameOverhead)) ==
            f.back());
    stream.insert(stream.end(), f.begin(), f.end());
  }
  StreamDecoder d;
  std::uniform_int_distribution<std::size_t> chunk(1, 300);
  std::size_t pos = 0, got = 0;
  while (pos < stream.size()) {
    const std::size_t n = std::min(chunk(rng), stream.size() - pos);
    d.feed(std::span(stream).subspan(pos, n));
    pos += n;
    for (auto& item : drain(d)) {
      REQUIRE(item.status == DecodeStatus::ok);
      REQUIRE(*item.message == sent[got]);
      ++got;
    }
  }
  CHECK(got == sent.size());
  CHECK(d.buffered() == 0);
}

TEST_CASE("decode: truncated frames need more bytes", "[protocol]") {
  const Bytes f = encode_message(ShieldImpact{0.25f, -0.5f, 0, 1.0});
  for (std::size_t n = 0; n < f.size(); ++n) {
    const auto r = decode_message(std::span(f).first(n));
    REQUIRE(r.status == DecodeStatus::need_more_bytes);
    REQUIRE(r.consumed == 0);
  }
}

TEST_CASE("decode: corrupted frames", "[protocol]") {
  const Bytes good = encode_message(FireWeapon{0, 1.0});

  SECTION("flipped checksum bit") {
    Bytes b = good;
    b.back() ^= 0x01;
    const auto r = decode_message(b);
    CHECK(r.status == DecodeStatus::bad_checksum);
    CHECK(r.consumed == b.size());
  }
  SECTION("flipped payload bit") {
    Bytes b = good;
    b[8] ^= 0x10;
    CHECK(decode_message(b).status == DecodeStatus::bad_checksum);
  }
  SECTION("bad magic resynchronizes on the next frame") {
    Bytes b{0x00, 0x11, 0x48, 0x00};
    b.insert(b.end(), good.begin(), good.end());
    StreamDecoder d;
    d.feed(b);
    const auto items = drain(d);
    REQUIRE(items.size() == 2);
    CHECK(items[0].status == DecodeStatus::bad_magic);
    CHECK(items[0].offset == 0);
    CHECK(items[1].status == DecodeStatus::ok);
    CHECK(items[1].offset == 4);
  }
  SECTION("unknown id with a valid checksum skips the frame") {
    Bytes b{0x48, 0x54, 0x01, 0x00, 0x55, 0x09};
    b.push_back(0x55 ^ 0x09);
    const auto r = decode_message(b);
    CHECK(r.status == DecodeStatus::unknown_msg_id);
    CHECK(r.consumed == b.size());
  }
  SECTION("length that disagrees with the id") {
    Bytes b = good;
    b[2] = 3;
    const auto r = decode_message(b);
    CHECK(r.status == DecodeStatus::bad_payload);
    CHECK(r.consumed == 2);
  }
  SECTION("well-framed but invalid field") {
    Bytes b = good;
    b[5] = 9;  // weapon id
    b.back() = wire::checksum(b[4], std::span(b).subspan(kHeaderSize, 9));
    const auto r = decode_message(b);
    CHECK(r.status == DecodeStatus::bad_payload);
    CHECK(r.consumed == b.size());
  }
}

TEST_CASE("decode: frames after random garbage are recovered", "[protocol]") {
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<int> len(0, 64);
  for (int trial = 0; trial < 2000; ++trial) {
    const Message m = fixtures::random_message(rng);
    Bytes b;
    for (int k = len(rng); k > 0; --k) b.push_back(static_cast<std::uint8_t>(byte(rng)));
    const std::size_t garbage = b.size();
    const auto f = encode_message(m);
    b.insert(b.end(), f.begin(), f.end());
    StreamDecoder d;
    d.feed(b);
    const auto items = drain(d);
    REQUIRE_FALSE(items.empty());
    const auto& last = items.back();
    REQUIRE(last.status == DecodeStatus::ok);
    REQUIRE(*last.message == m);
    REQUIRE(last.offset == garbage);
  }
}

TEST_CASE("decoder: 1e6 random bytes with bounded work", "[protocol]") {
  std::mt19937_64 rng(0xBADB17E5);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<std::size_t> chunk(1, 4096);
  Bytes noise(1'000'000);
  for (auto& b : noise) b = static_cast<std::uint8_t>(byte(rng));
  // sprinkle magic so the framed paths are exercised too
  for (std::size_t i = 0; i + 1 < noise.size(); i += 97) {
    noise[i] = kMagic0;
    noise[i + 1] = kMagic1;
  }
  StreamDecoder d;
  std::size_t pos = 0, items = 0;
  while (pos < noise.size()) {
    const std::size_t n = std::min(chunk(rng), noise.size() - pos);
    d.feed(std::span(noise).subspan(pos, n));
    pos += n;
    while (auto item = d.next()) {
      REQUIRE(item->status != DecodeStatus::need_more_bytes);
      ++items;
      REQUIRE(items <= pos);  // every item consumes at least one byte
    }
    REQUIRE(d.buffered() < kFrameOverhead + 105);
  }
  CHECK(d.offset() + d.buffered() == noise.size());
}
