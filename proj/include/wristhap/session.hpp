#pragma once

// Device-side protocol session: handshake state machine, translation of
// inbound event messages into renderer events, and decimated telemetry.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "wristhap/protocol.hpp"
#include "wristhap/renderer.hpp"

namespace wristhap::protocol {

/// Vibrate messages carry no direction; they render along +pitch.
inline constexpr double kProtocolVibrationThetaDeg = 90.0;

enum class SessionState { unconnected, connected };

class Session {
 public:
  Session(Renderer& renderer, int telemetry_decimation)
      : renderer_(renderer), decimation_(telemetry_decimation) {
    if (decimation_ < 1) throw std::invalid_argument("telemetry_decimation must be >= 1");
  }

  SessionState state() const { return state_; }

  /// Handles inbound messages in order; returns the replies.
  std::vector<Message> step(std::span<const Message> inbound) {
    std::vector<Message> out;
    for (const auto& m : inbound)
      if (auto reply = handle(m)) out.push_back(*reply);
    return out;
  }

  /// Reports a frame the decoder rejected.
  Message on_decode_error() { return ErrorMsg{error_code::kBadFrame}; }

  /// Call once per renderer tick; yields telemetry every `decimation` ticks.
  std::optional<Message> on_tick(const TraceRow& row) {
    ++ticks_;
    if (state_ != SessionState::connected || ticks_ % decimation_ != 0) return std::nullopt;
    return Telemetry{row};
  }

 private:
  std::optional<Message> handle(const Message& m) {
    if (const auto* hs = std::get_if<Handshake>(&m)) {
      if (hs->version != kProtocolVersion) {
        state_ = SessionState::unconnected;
        return ErrorMsg{error_code::kVersionMismatch};
      }
      state_ = SessionState::connected;
      return HandshakeAck{kProtocolVersion};
    }
    if (std::holds_alternative<ErrorMsg>(m)) return std::nullopt;
    if (std::holds_alternative<HandshakeAck>(m) || std::holds_alternative<Telemetry>(m))
      return ErrorMsg{error_code::kUnexpectedMessage};
    if (state_ != SessionState::connected) return ErrorMsg{error_code::kNotConnected};

    try {
      renderer_.schedule(to_event(m));
    } catch (const PastEvent&) {
      return ErrorMsg{error_code::kPastEvent};
    } catch (const Error&) {
      return ErrorMsg{error_code::kInvalidEvent};
    }
    return std::nullopt;
  }

  Event to_event(const Message& m) const {
    Event e;
    if (const auto* f = std::get_if<FireWeapon>(&m)) {
      e.time = f->t;
      e.body = FireWeaponEvent{static_cast<WeaponKind>(f->weapon_id), 1};
    } else if (const auto* s = std::get_if<ShieldImpact>(&m)) {
      e.time = s->t;
      e.body = ShieldImpactEvent{s->u, s->v, static_cast<BulletClass>(s->bullet_class)};
    } else if (const auto* t = std::get_if<SetTorque>(&m)) {
      e.time = renderer_.next_time();
      e.body = SetTorqueEvent{TorqueCommand::polar(t->theta_deg, t->magnitude)};
    } else {
      const auto& v = std::get<Vibrate>(m);
      e.time = renderer_.next_time();
      e.body = VibrationEvent{v.freq, v.amplitude, kProtocolVibrationThetaDeg, v.duration};
    }
    return e;
  }

  Renderer& renderer_;
  int decimation_;
  SessionState state_ = SessionState::unconnected;
  std::uint64_t ticks_ = 0;
};

/// Host-side encoding of a scenario timeline: a handshake followed by one
/// timestamped message per shot or impact. set_torque and vibration events
/// carry no timestamp on the wire and are rejected.
inline std::vector<Message> timeline_to_messages(const Scenario& s) {
  std::vector<Message> out{Handshake{kProtocolVersion}};
  for (const auto& e : s.timeline) {
    if (const auto* f = std::get_if<FireWeaponEvent>(&e.body)) {
      const auto& spec = s.weapon(f->weapon);
      for (int k = 0; k < f->shots; ++k) {
        const double at = k == 0 ? e.time : e.time + k * *spec.auto_interval;
        out.push_back(FireWeapon{static_cast<std::uint8_t>(f->weapon), at});
      }
    } else if (const auto* h = std::get_if<ShieldImpactEvent>(&e.body)) {
      const auto u = static_cast<float>(h->u);
      const auto v = static_cast<float>(h->v);
      if (u != h->u || v != h->v)
        throw std::invalid_argument("shield contact is not exactly representable as f32");
      out.push_back(ShieldImpact{u, v, static_cast<std::uint8_t>(h->bullet), e.time});
    } else {
      throw std::invalid_argument(std::string(e.name()) +
                                  " events have no timestamped wire form");
    }
  }
  return out;
}

inline std::vector<std::uint8_t> encode_all(std::span<const Message> msgs) {
  std::vector<std::uint8_t> out;
  for (const auto& m : msgs) {
    auto f = encode_message(m);
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

}  // namespace wristhap::protocol
