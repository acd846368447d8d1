#pragma once

// Host <-> device wire protocol.
//
// Frame layout (all multi-byte fields little-endian):
//
//   0x48 0x54 | length:u16 | msg_id:u8 | payload[length] | checksum:u8
//
// checksum = msg_id XOR every payload byte. Every message type has a fixed
// payload length; a frame whose length disagrees with its id is rejected.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

#include "wristhap/renderer.hpp"

namespace wristhap::protocol {

inline constexpr std::uint8_t kMagic0 = 0x48;  // 'H'
inline constexpr std::uint8_t kMagic1 = 0x54;  // 'T'
inline constexpr std::size_t kHeaderSize = 5;  // magic, length, msg_id
inline constexpr std::size_t kFrameOverhead = kHeaderSize + 1;
inline constexpr std::uint16_t kProtocolVersion = 1;

enum class MsgId : std::uint8_t {
  handshake = 0x01,
  handshake_ack = 0x02,
  fire_weapon = 0x10,
  shield_impact = 0x11,
  set_torque = 0x12,
  vibrate = 0x13,
  telemetry = 0x20,
  error = 0x7F,
};

namespace error_code {
inline constexpr std::uint16_t kVersionMismatch = 1;
inline constexpr std::uint16_t kNotConnected = 2;
inline constexpr std::uint16_t kBadFrame = 3;
inline constexpr std::uint16_t kPastEvent = 4;
inline constexpr std::uint16_t kUnexpectedMessage = 5;
inline constexpr std::uint16_t kInvalidEvent = 6;
}  // namespace error_code

struct Handshake {
  std::uint16_t version = kProtocolVersion;
  bool operator==(const Handshake&) const = default;
};
struct HandshakeAck {
  std::uint16_t version = kProtocolVersion;
  bool operator==(const HandshakeAck&) const = default;
};
struct FireWeapon {
  std::uint8_t weapon_id = 0;  // WeaponKind
  double t = 0.0;
  bool operator==(const FireWeapon&) const = default;
};
struct ShieldImpact {
  float u = 0.0f;
  float v = 0.0f;
  std::uint8_t bullet_class = 0;  // BulletClass
  double t = 0.0;
  bool operator==(const ShieldImpact&) const = default;
};
struct SetTorque {
  float theta_deg = 0.0f;
  float magnitude = 0.0f;
  bool operator==(const SetTorque&) const = default;
};
struct Vibrate {
  float freq = 0.0f;
  float amplitude = 0.0f;
  float duration = 0.0f;
  bool operator==(const Vibrate&) const = default;
};
struct Telemetry {
  TraceRow row;
  bool operator==(const Telemetry&) const = default;
};
struct ErrorMsg {
  std::uint16_t code = 0;
  bool operator==(const ErrorMsg&) const = default;
};

using Message = std::variant<Handshake, HandshakeAck, FireWeapon, ShieldImpact, SetTorque, Vibrate,
                             Telemetry, ErrorMsg>;

inline constexpr std::array<MsgId, 8> kIdsByIndex{
    MsgId::handshake, MsgId::handshake_ack, MsgId::fire_weapon, MsgId::shield_impact,
    MsgId::set_torque, MsgId::vibrate,      MsgId::telemetry,   MsgId::error};

inline MsgId msg_id(const Message& m) { return kIdsByIndex[m.index()]; }

/// Fixed payload size per message id; nullopt for unknown ids.
inline std::optional<std::size_t> payload_size(std::uint8_t id) {
  switch (static_cast<MsgId>(id)) {
    case MsgId::handshake:
    case MsgId::handshake_ack:
    case MsgId::error: return 2;
    case MsgId::fire_weapon: return 1 + 8;
    case MsgId::shield_impact: return 4 + 4 + 1 + 8;
    case MsgId::set_torque: return 4 + 4;
    case MsgId::vibrate: return 4 + 4 + 4;
    case MsgId::telemetry: return 13 * 8 + 1;
  }
  return std::nullopt;
}

inline bool is_valid(const Message& m) {
  auto fin = [](auto x) { return std::isfinite(x); };
  return std::visit(
      [&](const auto& x) -> bool {
        using M = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<M, FireWeapon>) {
          return x.weapon_id <= 2 && fin(x.t) && x.t >= 0.0;
        } else if constexpr (std::is_same_v<M, ShieldImpact>) {
          return fin(x.u) && fin(x.v) && std::abs(x.u) <= 1.0f && std::abs(x.v) <= 1.0f &&
                 x.bullet_class <= 1 && fin(x.t) && x.t >= 0.0;
        } else if constexpr (std::is_same_v<M, SetTorque>) {
          return fin(x.theta_deg) && fin(x.magnitude) && x.magnitude >= 0.0f;
        } else if constexpr (std::is_same_v<M, Vibrate>) {
          return fin(x.freq) && x.freq > 0.0f && fin(x.amplitude) && x.amplitude >= 0.0f &&
                 fin(x.duration) && x.duration > 0.0f;
        } else if constexpr (std::is_same_v<M, Telemetry>) {
          const TraceRow& r = x.row;
          bool ok = fin(r.t) && r.desired.is_finite() && r.clamped_torque.is_finite() &&
                    r.achieved.is_finite();
          for (int i = 0; i < kStrings; ++i) ok = ok && fin(r.commanded.t[i]) && fin(r.actual.t[i]);
          return ok;
        } else {
          return true;
        }
      },
      m);
}

namespace wire {

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v & 0xFF));
    u8(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() { return in_[pos_++]; }
  std::uint16_t u16() {
    const std::uint16_t lo = u8();
    const std::uint16_t hi = u8();
    return static_cast<std::uint16_t>(lo | (hi << 8));
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

inline void write_payload(Writer& w, const Message& m) {
  std::visit(
      [&](const auto& x) {
        using M = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<M, Handshake> || std::is_same_v<M, HandshakeAck>) {
          w.u16(x.version);
        } else if constexpr (std::is_same_v<M, FireWeapon>) {
          w.u8(x.weapon_id);
          w.f64(x.t);
        } else if constexpr (std::is_same_v<M, ShieldImpact>) {
          w.f32(x.u);
          w.f32(x.v);
          w.u8(x.bullet_class);
          w.f64(x.t);
        } else if constexpr (std::is_same_v<M, SetTorque>) {
          w.f32(x.theta_deg);
          w.f32(x.magnitude);
        } else if constexpr (std::is_same_v<M, Vibrate>) {
          w.f32(x.freq);
          w.f32(x.amplitude);
          w.f32(x.duration);
        } else if constexpr (std::is_same_v<M, Telemetry>) {
          const TraceRow& r = x.row;
          for (double v : {r.t, r.desired.yaw, r.desired.pitch, r.clamped_torque.yaw,
                           r.clamped_torque.pitch, r.commanded.t[0], r.commanded.t[1],
                           r.commanded.t[2], r.actual.t[0], r.actual.t[1], r.actual.t[2],
                           r.achieved.yaw, r.achieved.pitch})
            w.f64(v);
          std::uint8_t flags = r.clamped ? 1 : 0;
          for (int i = 0; i < kStrings; ++i)
            if (r.saturated[i]) flags |= static_cast<std::uint8_t>(1u << (i + 1));
          w.u8(flags);
        } else {
          w.u16(x.code);
        }
      },
      m);
}

inline std::optional<Message> read_payload(MsgId id, std::span<const std::uint8_t> p) {
  Reader r(p);
  Message m;
  switch (id) {
    case MsgId::handshake: m = Handshake{r.u16()}; break;
    case MsgId::handshake_ack: m = HandshakeAck{r.u16()}; break;
    case MsgId::error: m = ErrorMsg{r.u16()}; break;
    case MsgId::fire_weapon: {
      FireWeapon x;
      x.weapon_id = r.u8();
      x.t = r.f64();
      m = x;
      break;
    }
    case MsgId::shield_impact: {
      ShieldImpact x;
      x.u = r.f32();
      x.v = r.f32();
      x.bullet_class = r.u8();
      x.t = r.f64();
      m = x;
      break;
    }
    case MsgId::set_torque: {
      SetTorque x;
      x.theta_deg = r.f32();
      x.magnitude = r.f32();
      m = x;
      break;
    }
    case MsgId::vibrate: {
      Vibrate x;
      x.freq = r.f32();
      x.amplitude = r.f32();
      x.duration = r.f32();
      m = x;
      break;
    }
    case MsgId::telemetry: {
      TraceRow row;
      row.t = r.f64();
      row.desired = {r.f64(), r.f64()};
      row.clamped_torque = {r.f64(), r.f64()};
      for (auto& v : row.commanded.t) v = r.f64();
      for (auto& v : row.actual.t) v = r.f64();
      row.achieved = {r.f64(), r.f64()};
      const std::uint8_t flags = r.u8();
      if (flags & 0xF0) return std::nullopt;
      row.clamped = flags & 1;
      for (int i = 0; i < kStrings; ++i) row.saturated[i] = (flags >> (i + 1)) & 1;
      m = Telemetry{row};
      break;
    }
    default: return std::nullopt;
  }
  if (!is_valid(m)) return std::nullopt;
  return m;
}

inline std::uint8_t checksum(std::uint8_t id, std::span<const std::uint8_t> payload) {
  std::uint8_t c = id;
  for (auto b : payload) c ^= b;
  return c;
}

}  // namespace wire

/// One complete frame. Throws std::invalid_argument for messages that break
/// their field invariants.
inline std::vector<std::uint8_t> encode_message(const Message& m) {
  if (!is_valid(m)) throw std::invalid_argument("message violates its field invariants");
  const auto id = static_cast<std::uint8_t>(msg_id(m));
  std::vector<std::uint8_t> out{kMagic0, kMagic1, 0, 0, id};
  wire::Writer w(out);
  write_payload(w, m);
  const std::size_t len = out.size() - kHeaderSize;
  out[2] = static_cast<std::uint8_t>(len & 0xFF);
  out[3] = static_cast<std::uint8_t>(len >> 8);
  out.push_back(wire::checksum(id, std::span(out).subspan(kHeaderSize, len)));
  return out;
}

enum class DecodeStatus {
  ok,
  need_more_bytes,
  bad_magic,
  bad_checksum,
  unknown_msg_id,
  bad_payload,
};

inline std::string_view to_string(DecodeStatus s) {
  switch (s) {
    case DecodeStatus::ok: return "ok";
    case DecodeStatus::need_more_bytes: return "need more bytes";
    case DecodeStatus::bad_magic: return "bad magic";
    case DecodeStatus::bad_checksum: return "bad checksum";
    case DecodeStatus::unknown_msg_id: return "unknown message id";
    case DecodeStatus::bad_payload: return "bad payload";
  }
  return "?";
}

struct DecodeResult {
  DecodeStatus status = DecodeStatus::need_more_bytes;
  std::optional<Message> message;
  std::size_t consumed = 0;
};

/// Decodes the frame at the front of `bytes`.
///
/// need_more_bytes never consumes. A corrupted frame whose extent is known
/// (length matches its id) is consumed whole; otherwise only the magic is
/// dropped and the next call rescans for a frame start.
inline DecodeResult decode_message(std::span<const std::uint8_t> bytes) {
  DecodeResult r;
  const std::size_t n = bytes.size();
  if (n == 0) return r;

  if (bytes[0] != kMagic0 || (n >= 2 && bytes[1] != kMagic1)) {
    std::size_t i = 1;
    while (i < n && !(bytes[i] == kMagic0 && (i + 1 == n || bytes[i + 1] == kMagic1))) ++i;
    r.status = DecodeStatus::bad_magic;
    r.consumed = i;
    return r;
  }
  if (n < kHeaderSize) return r;

  const std::size_t len = static_cast<std::size_t>(bytes[2]) | (static_cast<std::size_t>(bytes[3]) << 8);
  const std::uint8_t id = bytes[4];
  const auto expected = payload_size(id);
  const std::size_t frame = len + kFrameOverhead;

  if (!expected) {
    r.status = DecodeStatus::unknown_msg_id;
    const bool whole = n >= frame &&
                       wire::checksum(id, bytes.subspan(kHeaderSize, len)) == bytes[frame - 1];
    r.consumed = whole ? frame : 2;
    return r;
  }
  if (len != *expected) {
    r.status = DecodeStatus::bad_payload;
    r.consumed = 2;
    return r;
  }
  if (n < frame) return r;

  const auto payload = bytes.subspan(kHeaderSize, len);
  r.consumed = frame;
  if (wire::checksum(id, payload) != bytes[frame - 1]) {
    r.status = DecodeStatus::bad_checksum;
    return r;
  }
  r.message = wire::read_payload(static_cast<MsgId>(id), payload);
  r.status = r.message ? DecodeStatus::ok : DecodeStatus::bad_payload;
  return r;
}

/// Incremental decoder over an ordered byte stream.
class StreamDecoder {
 public:
  struct Item {
    DecodeStatus status;
    std::optional<Message> message;
    std::size_t offset;  // stream offset where the frame (or garbage) started
  };

  void feed(std::span<const std::uint8_t> bytes) {
    compact();
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
  }

  /// Next message or error; nullopt when more bytes are needed.
  std::optional<Item> next() {
    auto r = decode_message(std::span(buf_).subspan(head_));
    if (r.status == DecodeStatus::need_more_bytes) return std::nullopt;
    Item item{r.status, std::move(r.message), offset_};
    head_ += r.consumed;
    offset_ += r.consumed;
    return item;
  }

  std::size_t buffered() const { return buf_.size() - head_; }
  std::size_t offset() const { return offset_; }

 private:
  void compact() {
    if (head_ == 0) return;
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(head_));
    head_ = 0;
  }

  std::vector<std::uint8_t> buf_;
  std::size_t head_ = 0;
  std::size_t offset_ = 0;
};

}  // namespace wristhap::protocol
