#pragma once

// Seeded instance generators shared by the unit tests and the acceptance
// binary, plus adapters from library types onto the plain-array oracles.

#include <random>

#include "oracles.hpp"
#include "wristhap/geometry.hpp"
#include "wristhap/protocol.hpp"
#include "wristhap/statics.hpp"

namespace fixtures {

inline oracle::Mat23 to_mat23(const wristhap::MomentMatrix& m) {
  return {oracle::Col2{m.a(0, 0), m.a(1, 0)}, oracle::Col2{m.a(0, 1), m.a(1, 1)},
          oracle::Col2{m.a(0, 2), m.a(1, 2)}};
}

/// Canonical layout with every anchor and exit coordinate jittered by up to `spread` m.
inline wristhap::LayoutConfig random_layout(std::mt19937_64& rng, double spread = 0.01) {
  std::uniform_real_distribution<double> d(-spread, spread);
  wristhap::LayoutConfig l = wristhap::canonical_layout();
  for (auto& p : l.handle_anchors) p += wristhap::Vec3(d(rng), d(rng), d(rng));
  for (auto& p : l.motor_exits) p += wristhap::Vec3(d(rng), d(rng), d(rng));
  return l;
}

struct AllocationCase {
  wristhap::MomentMatrix m;
  wristhap::TorqueCommand desired;
  wristhap::TensionLimits limits;
};

/// Random layout, t_max in [5, 40] N, direction uniform, magnitude up to
/// 1.3x the true boundary so roughly a quarter of the cases are infeasible.
inline AllocationCase random_allocation_case(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AllocationCase c;
  c.m = wristhap::moment_matrix(random_layout(rng), wristhap::Pose::identity());
  c.limits.t_max = 5.0 + 35.0 * unit(rng);
  const double theta = 360.0 * unit(rng);
  const auto hull = oracle::zonotope_hull(to_mat23(c.m), c.limits.t_max);
  const double extent = oracle::radial_extent(hull, theta);
  c.desired = wristhap::TorqueCommand::polar(theta, 1.3 * extent * unit(rng));
  return c;
}

struct OracleResult {
  std::array<double, 3> t{};
  oracle::Col2 achieved{};
  bool clamped = false;
};

/// Oracle counterpart of allocate_tensions: exhaustive active set on the
/// command itself, or on its radial projection onto the zonotope boundary.
inline OracleResult oracle_allocate(const oracle::Mat23& a, oracle::Col2 tau, double t_max) {
  OracleResult out;
  auto sol = oracle::active_set(a, tau, t_max);
  if (!sol.feasible) {
    out.clamped = true;
    const double mag = std::hypot(tau[0], tau[1]);
    const double theta = std::atan2(tau[1], tau[0]) * 180.0 / std::numbers::pi;
    double r = oracle::radial_extent(oracle::zonotope_hull(a, t_max), theta);
    for (double shrink = 1e-12; !sol.feasible && shrink < 1e-6; shrink *= 10.0) {
      tau = {tau[0] / mag * r * (1.0 - shrink), tau[1] / mag * r * (1.0 - shrink)};
      sol = oracle::active_set(a, tau, t_max);
    }
  }
  out.t = sol.t;
  for (int i = 0; i < 3; ++i) {
    out.achieved[0] += a[i][0] * sol.t[i];
    out.achieved[1] += a[i][1] * sol.t[i];
  }
  return out;
}

/// Uniformly picks a message kind, then valid field values.
inline wristhap::protocol::Message random_message(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kind(0, 7);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> time(0.0, 1e4);
  std::uniform_real_distribution<double> any(-1e6, 1e6);
  std::bernoulli_distribution coin(0.5);
  auto u16 = [&] { return static_cast<std::uint16_t>(byte(rng) | (byte(rng) << 8)); };
  switch (kind(rng)) {
    case 0: return wristhap::protocol::Handshake{u16()};
    case 1: return wristhap::protocol::HandshakeAck{u16()};
    case 2: return wristhap::protocol::FireWeapon{static_cast<std::uint8_t>(byte(rng) % 3), time(rng)};
    case 3:
      return wristhap::protocol::ShieldImpact{static_cast<float>(unit(rng)), static_cast<float>(unit(rng)),
                          static_cast<std::uint8_t>(byte(rng) % 2), time(rng)};
    case 4:
      return wristhap::protocol::SetTorque{static_cast<float>(360.0 * unit(rng)),
                       static_cast<float>(std::abs(any(rng)))};
    case 5:
      return wristhap::protocol::Vibrate{static_cast<float>(1.0 + std::abs(any(rng))),
                     static_cast<float>(std::abs(unit(rng))),
                     static_cast<float>(0.001 + std::abs(unit(rng)))};
    case 6: {
      wristhap::TraceRow r;
      r.t = time(rng);
      r.desired = {any(rng), any(rng)};
      r.clamped_torque = {any(rng), any(rng)};
      r.commanded = {{any(rng), any(rng), any(rng)}};
      r.actual = {{any(rng), any(rng), any(rng)}};
      r.achieved = {any(rng), any(rng)};
      r.clamped = coin(rng);
      r.saturated = {coin(rng), coin(rng), coin(rng)};
      return wristhap::protocol::Telemetry{r};
    }
    default: return wristhap::protocol::ErrorMsg{u16()};
  }
}

}  // namespace fixtures
