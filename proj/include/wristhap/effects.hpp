#pragma once

// Time-parameterized haptic effects: weapon recoil, shield impacts and
// vibration. Every effect is an immutable value that samples to a
// (yaw, pitch) torque and is exactly zero outside [start, start + duration).

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "wristhap/errors.hpp"
#include "wristhap/geometry.hpp"
#include "wristhap/statics.hpp"

namespace wristhap {

enum class WeaponKind : std::uint8_t { pistol = 0, rifle = 1, shotgun = 2 };
enum class BulletClass : std::uint8_t { red = 0, blue = 1 };

inline constexpr std::array<WeaponKind, 3> kAllWeapons{WeaponKind::pistol, WeaponKind::rifle,
                                                       WeaponKind::shotgun};
inline constexpr std::array<BulletClass, 2> kAllBullets{BulletClass::red, BulletClass::blue};

/// Recoil kicks the muzzle up: +pitch.
inline constexpr double kRecoilThetaDeg = 90.0;
/// Recoil support length in decay constants.
inline constexpr double kRecoilSupportTaus = 5.0;
inline constexpr double kImpactPulseWidth = 0.05;  // s

inline std::string_view to_string(WeaponKind w) {
  switch (w) {
    case WeaponKind::pistol: return "pistol";
    case WeaponKind::rifle: return "rifle";
    case WeaponKind::shotgun: return "shotgun";
  }
  return "?";
}

inline std::string_view to_string(BulletClass b) {
  return b == BulletClass::red ? "red" : "blue";
}

inline std::optional<WeaponKind> weapon_from_string(std::string_view s) {
  for (auto w : kAllWeapons)
    if (to_string(w) == s) return w;
  return std::nullopt;
}

inline std::optional<BulletClass> bullet_from_string(std::string_view s) {
  for (auto b : kAllBullets)
    if (to_string(b) == s) return b;
  return std::nullopt;
}

struct WeaponSpec {
  WeaponKind kind = WeaponKind::pistol;
  double peak = 0.4;        // N m
  double decay_tau = 0.04;  // s
  std::optional<double> auto_interval;  // s, automatic weapons only
  double direction_jitter_std = 0.0;    // deg

  bool is_valid() const {
    return std::isfinite(peak) && peak > 0.0 && std::isfinite(decay_tau) && decay_tau > 0.0 &&
           (!auto_interval || (std::isfinite(*auto_interval) && *auto_interval > 0.0)) &&
           std::isfinite(direction_jitter_std) && direction_jitter_std >= 0.0;
  }
};

inline WeaponSpec default_weapon(WeaponKind kind) {
  switch (kind) {
    case WeaponKind::pistol: return {kind, 0.4, 0.040, std::nullopt, 0.0};
    case WeaponKind::rifle: return {kind, 0.6, 0.030, 0.100, 0.0};
    case WeaponKind::shotgun: return {kind, 1.2, 0.060, std::nullopt, 5.0};
  }
  throw std::invalid_argument("unknown weapon");
}

struct BulletSpec {
  BulletClass cls = BulletClass::red;
  double impact_force = 20.0;  // N
  double radius = 0.02;        // m
};

inline BulletSpec default_bullet(BulletClass cls) {
  return cls == BulletClass::red ? BulletSpec{cls, 20.0, 0.02} : BulletSpec{cls, 40.0, 0.04};
}

/// Square shield plate in the forearm frame. Normalized contact (u, v) in
/// [-1, 1]^2 maps to center + half_extent * (u * u_axis + v * v_axis).
struct ShieldModel {
  Vec3 center{0.02, 0.0, 0.15};
  Vec3 normal{0.0, 0.0, 1.0};  // faces incoming bullets
  double half_extent = 0.08;   // m

  bool is_valid() const {
    return center.allFinite() && normal.allFinite() && std::abs(normal.norm() - 1.0) <= 1e-9 &&
           std::isfinite(half_extent) && half_extent > 0.0;
  }

  /// In-plane "up": the vertical axis projected onto the plate.
  Vec3 v_axis() const {
    Vec3 up = Vec3::UnitX() - Vec3::UnitX().dot(normal) * normal;
    if (up.norm() < 1e-9) up = Vec3::UnitY() - Vec3::UnitY().dot(normal) * normal;
    return up.normalized();
  }
  Vec3 u_axis() const { return normal.cross(v_axis()); }

  Vec3 contact_point(double u, double v) const {
    return center + half_extent * (u * u_axis() + v * v_axis());
  }
};

struct RecoilShape {
  double peak = 0.0;           // N m
  double decay_tau = 0.0;      // s
  double theta_deg = kRecoilThetaDeg;
};

struct ImpactShape {
  TorqueCommand impulse;  // peak torque vector
};

struct VibrationShape {
  double freq = 0.0;       // Hz
  double amplitude = 0.0;  // N m
  double theta_deg = 0.0;
};

enum class EffectKind { recoil, impact, vibration };

struct Effect {
  double start = 0.0;
  double duration = 0.0;
  std::variant<RecoilShape, ImpactShape, VibrationShape> shape;

  EffectKind kind() const { return static_cast<EffectKind>(shape.index()); }
  double end() const { return start + duration; }
  bool active_at(double t) const { return t >= start && t < end(); }

  TorqueCommand sample(double t) const {
    if (!active_at(t)) return {};
    const double local = t - start;
    return std::visit(
        [&](const auto& s) -> TorqueCommand {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, RecoilShape>) {
            return TorqueCommand::polar(s.theta_deg, s.peak * std::exp(-local / s.decay_tau));
          } else if constexpr (std::is_same_v<S, ImpactShape>) {
            const double w = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * local / duration));
            return s.impulse * w;
          } else {
            const double mag =
                s.amplitude * std::abs(std::sin(2.0 * std::numbers::pi * s.freq * local));
            return TorqueCommand::polar(s.theta_deg, mag);
          }
        },
        shape);
  }
};

/// One effect per shot. Automatic weapons fire `shots` rounds spaced by
/// auto_interval; shotgun direction jitter is drawn once per shot from a
/// generator seeded with `rng_seed`.
inline std::vector<Effect> recoil_effect(const WeaponSpec& w, double trigger,
                                         std::uint64_t rng_seed, int shots = 1) {
  if (!w.is_valid()) throw std::invalid_argument("invalid weapon spec");
  if (!(trigger >= 0.0) || !std::isfinite(trigger))
    throw std::invalid_argument("trigger time must be >= 0");
  if (shots < 1) throw std::invalid_argument("shots must be >= 1");
  if (shots > 1 && !w.auto_interval)
    throw std::invalid_argument(std::string(to_string(w.kind)) + " cannot fire bursts");

  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::vector<Effect> out;
  out.reserve(static_cast<std::size_t>(shots));
  for (int k = 0; k < shots; ++k) {
    const double at = k == 0 ? trigger : trigger + k * *w.auto_interval;
    double theta = kRecoilThetaDeg;
    if (w.direction_jitter_std > 0.0) theta += w.direction_jitter_std * jitter(rng);
    out.push_back({at, kRecoilSupportTaus * w.decay_tau, RecoilShape{w.peak, w.decay_tau, theta}});
  }
  return out;
}

inline Effect shield_impact_effect(const Vec3& contact, const BulletSpec& b, const Vec3& bullet_dir,
                                   double t, const ShieldModel& shield, const Vec3& wrist_pivot) {
  if (!shield.is_valid()) throw std::invalid_argument("invalid shield model");
  if (!contact.allFinite() || !bullet_dir.allFinite() ||
      std::abs(bullet_dir.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("bullet direction must be a unit vector");
  if (!(b.impact_force > 0.0)) throw std::invalid_argument("impact force must be positive");

  const Vec3 offset = contact - shield.center;
  const double slack = 1e-12 + 1e-12 * shield.half_extent;
  if (std::abs(offset.dot(shield.normal)) > 1e-9 ||
      std::abs(offset.dot(shield.u_axis())) > shield.half_extent + slack ||
      std::abs(offset.dot(shield.v_axis())) > shield.half_extent + slack)
    throw ContactOutsideShield("contact point is not on the shield plate");

  const Vec3 torque = (contact - wrist_pivot).cross(b.impact_force * bullet_dir);
  return {t, kImpactPulseWidth, ImpactShape{{torque[kYawAxis], torque[kPitchAxis]}}};
}

inline Effect vibration_effect(double freq, double amplitude, double theta_deg, double start,
                               double duration) {
  if (!(freq > 0.0) || !std::isfinite(freq)) throw std::invalid_argument("freq must be > 0");
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
    throw std::invalid_argument("amplitude must be >= 0");
  if (!(duration > 0.0) || !std::isfinite(duration))
    throw std::invalid_argument("duration must be > 0");
  if (!std::isfinite(theta_deg) || !std::isfinite(start))
    throw std::invalid_argument("theta and start must be finite");
  return {start, duration, VibrationShape{freq, amplitude, theta_deg}};
}

/// Componentwise sum of the effects active at `t`, in span order.
inline TorqueCommand mix_effects(std::span<const Effect> active, double t) {
  TorqueCommand sum;
  for (const auto& e : active)
    if (e.active_at(t)) sum += e.sample(t);
  return sum;
}

}  // namespace wristhap
