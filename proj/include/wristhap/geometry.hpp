#pragma once

// Device geometry: handle anchors, wrist pivot and wristband motor exits,
// and the 2x3 moment matrix mapping string tensions to wrist torque.
//
// Forearm frame (right-handed, meters):
//   x  vertical   -> yaw axis
//   y  lateral    -> pitch axis
//   z  along the forearm toward the hand (roll axis)
// Ring angles are measured looking along +z: 0 deg = +y, 90 deg = +x (top).

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wristhap/errors.hpp"

namespace wristhap {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr int kStrings = 3;
inline constexpr int kYawAxis = 0;
inline constexpr int kPitchAxis = 1;
inline constexpr int kRollAxis = 2;

/// Minimum anchor-to-exit distance for a string to have a direction.
inline constexpr double kMinStringLength = 1e-6;

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Rigid transform from the handle frame into the forearm frame.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }

  static Pose about_axis(const Vec3& axis, double angle_rad,
                         const Vec3& translation = Vec3::Zero()) {
    Pose p;
    p.rotation = Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
    p.translation = translation;
    return p;
  }

  /// Roll about the forearm axis.
  static Pose roll(double angle_rad) { return about_axis(Vec3::UnitZ(), angle_rad); }

  bool is_valid(double tol = 1e-9) const {
    if (!rotation.allFinite() || !translation.allFinite()) return false;
    const double ortho_err =
        (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    return ortho_err <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
  }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

struct LayoutConfig {
  std::array<Vec3, kStrings> handle_anchors;  // handle frame
  Vec3 wrist_pivot = Vec3::Zero();            // forearm frame
  std::array<Vec3, kStrings> motor_exits;     // forearm frame
  std::array<int, kStrings> string_map{0, 1, 2};  // anchor i -> motor string_map[i]

  const Vec3& exit_of(int string) const { return motor_exits[string_map[string]]; }
};

/// Column i holds the (yaw, pitch) torque per newton of tension in string i.
struct MomentMatrix {
  Eigen::Matrix<double, 2, kStrings> a = Eigen::Matrix<double, 2, kStrings>::Zero();

  Eigen::Vector2d column(int i) const { return a.col(i); }
  bool is_zero() const { return (a.array() == 0.0).all(); }
};

/// Canonical dimensions used when a layout key is omitted.
namespace canonical {
inline constexpr double kAnchorRingRadius = 0.03;
inline constexpr double kExitRingRadius = 0.04;
inline constexpr double kGripOffset = 0.05;    // grip center ahead of the wrist pivot
inline constexpr double kExitSetback = 0.10;   // exits behind the grip center
inline constexpr std::array<double, kStrings> kRingAnglesDeg{90.0, 210.0, 330.0};
inline constexpr int kCenterString = 0;
}  // namespace canonical

/// Point on a ring of `radius` around the forearm axis at axial position `z`.
inline Vec3 ring_point(double radius, double angle_deg, double z) {
  const double a = deg_to_rad(angle_deg);
  return {radius * std::sin(a), radius * std::cos(a), z};
}

inline std::array<Vec3, kStrings> canonical_handle_anchors() {
  std::array<Vec3, kStrings> out;
  for (int i = 0; i < kStrings; ++i)
    out[i] = ring_point(canonical::kAnchorRingRadius, canonical::kRingAnglesDeg[i],
                        canonical::kGripOffset);
  return out;
}

inline std::array<Vec3, kStrings> canonical_motor_exits() {
  std::array<Vec3, kStrings> out;
  for (int i = 0; i < kStrings; ++i)
    out[i] = ring_point(canonical::kExitRingRadius, canonical::kRingAnglesDeg[i],
                        canonical::kGripOffset - canonical::kExitSetback);
  return out;
}

inline LayoutConfig canonical_layout() {
  LayoutConfig l;
  l.handle_anchors = canonical_handle_anchors();
  l.wrist_pivot = Vec3::Zero();
  l.motor_exits = canonical_motor_exits();
  l.string_map = {0, 1, 2};
  return l;
}

/// Layout values as read from a config; omitted fields take canonical values.
struct RawLayout {
  std::optional<std::array<Vec3, kStrings>> handle_anchors;
  std::optional<Vec3> wrist_pivot;
  std::optional<std::array<Vec3, kStrings>> motor_exits;
  std::optional<std::array<int, kStrings>> string_map;
};

/// Every invariant violation of `layout`, empty when valid.
inline std::vector<std::string> layout_violations(const LayoutConfig& layout) {
  std::vector<std::string> out;
  auto finite = [](const Vec3& v) { return v.allFinite(); };
  for (int i = 0; i < kStrings; ++i) {
    if (!finite(layout.handle_anchors[i]))
      out.push_back("handle_anchors[" + std::to_string(i) + "] is not finite");
    if (!finite(layout.motor_exits[i]))
      out.push_back("motor_exits[" + std::to_string(i) + "] is not finite");
  }
  if (!finite(layout.wrist_pivot)) out.push_back("wrist_pivot is not finite");
  if (!out.empty()) return out;

  for (int i = 0; i < kStrings; ++i)
    for (int j = i + 1; j < kStrings; ++j) {
      if ((layout.handle_anchors[i] - layout.handle_anchors[j]).norm() <= kMinStringLength)
        out.push_back("handle_anchors[" + std::to_string(i) + "] and [" + std::to_string(j) +
                      "] coincide");
      if ((layout.motor_exits[i] - layout.motor_exits[j]).norm() <= kMinStringLength)
        out.push_back("motor_exits[" + std::to_string(i) + "] and [" + std::to_string(j) +
                      "] coincide");
    }

  std::array<bool, kStrings> seen{};
  bool bijective = true;
  for (int m : layout.string_map) {
    if (m < 0 || m >= kStrings || seen[m]) {
      bijective = false;
      break;
    }
    seen[m] = true;
  }
  if (!bijective) {
    out.push_back("string_map is not a permutation of {0,1,2}");
    return out;
  }

  for (int i = 0; i < kStrings; ++i)
    if ((layout.handle_anchors[i] - layout.exit_of(i)).norm() <= kMinStringLength)
      out.push_back("string " + std::to_string(i) + " anchor coincides with its motor exit");
  return out;
}

inline LayoutConfig build_layout(const RawLayout& raw) {
  LayoutConfig l = canonical_layout();
  if (raw.handle_anchors) l.handle_anchors = *raw.handle_anchors;
  if (raw.wrist_pivot) l.wrist_pivot = *raw.wrist_pivot;
  if (raw.motor_exits) l.motor_exits = *raw.motor_exits;
  if (raw.string_map) l.string_map = *raw.string_map;
  auto violations = layout_violations(l);
  if (!violations.empty()) {
    std::string msg = "degenerate layout: " + violations.front();
    for (std::size_t i = 1; i < violations.size(); ++i) msg += "; " + violations[i];
    throw DegenerateGeometry(msg);
  }
  return l;
}

/// Forearm-frame anchor positions under `pose`.
inline std::array<Vec3, kStrings> world_anchors(const LayoutConfig& layout, const Pose& pose) {
  std::array<Vec3, kStrings> out;
  for (int i = 0; i < kStrings; ++i) out[i] = pose.apply(layout.handle_anchors[i]);
  return out;
}

/// Unit pull direction of each string, from its anchor toward its motor exit.
inline std::array<Vec3, kStrings> string_directions(const LayoutConfig& layout, const Pose& pose) {
  if (!pose.is_valid()) throw std::invalid_argument("pose rotation is not a proper rotation");
  const auto anchors = world_anchors(layout, pose);
  std::array<Vec3, kStrings> out;
  for (int i = 0; i < kStrings; ++i) {
    const Vec3 d = layout.exit_of(i) - anchors[i];
    const double len = d.norm();
    if (!(len > kMinStringLength))
      throw DegenerateGeometry("string " + std::to_string(i) +
                               " anchor coincides with its motor exit");
    out[i] = d / len;
  }
  return out;
}

/// Yaw/pitch projection of r_i x u_i; the roll component is discarded.
inline MomentMatrix moment_matrix(const LayoutConfig& layout, const Pose& pose) {
  const auto dirs = string_directions(layout, pose);
  const auto anchors = world_anchors(layout, pose);
  MomentMatrix m;
  for (int i = 0; i < kStrings; ++i) {
    const Vec3 c = (anchors[i] - layout.wrist_pivot).cross(dirs[i]);
    m.a(0, i) = c[kYawAxis];
    m.a(1, i) = c[kPitchAxis];
  }
  return m;
}

}  // namespace wristhap
