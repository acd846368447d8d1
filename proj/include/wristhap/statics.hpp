#pragma once

// Tension <-> torque statics for the three-string handle.
//
// The allocator returns the minimum-Euclidean-norm tension vector with
// 0 <= t_i <= t_max and A t = tau. For a rank-2 moment matrix the exact
// solution set is the line t = t_p + s n (t_p = A^T (A A^T)^-1 tau, n spanning
// ker A, t_p orthogonal to n); the box turns into an interval on s and the
// optimum is the point of that interval closest to s = 0. Rank-deficient
// matrices fall back to enumerating every free/lower/upper pattern.

#include <Eigen/Core>
#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "wristhap/errors.hpp"
#include "wristhap/geometry.hpp"

namespace wristhap {

struct TorqueCommand {
  double yaw = 0.0;    // N m
  double pitch = 0.0;  // N m

  /// theta in degrees (0 = +yaw, 90 = +pitch), magnitude >= 0.
  static TorqueCommand polar(double theta_deg, double magnitude) {
    if (!std::isfinite(theta_deg) || !std::isfinite(magnitude) || magnitude < 0.0)
      throw std::invalid_argument("polar torque needs finite theta and magnitude >= 0");
    const double a = deg_to_rad(theta_deg);
    return {magnitude * std::cos(a), magnitude * std::sin(a)};
  }

  double magnitude() const { return std::hypot(yaw, pitch); }

  /// Direction in [0, 360).
  double theta_deg() const {
    double d = rad_to_deg(std::atan2(pitch, yaw));
    if (d < 0.0) d += 360.0;
    if (d >= 360.0) d -= 360.0;
    return d;
  }

  bool is_finite() const { return std::isfinite(yaw) && std::isfinite(pitch); }
  bool is_zero() const { return yaw == 0.0 && pitch == 0.0; }
  Eigen::Vector2d vec() const { return {yaw, pitch}; }
  static TorqueCommand from(const Eigen::Vector2d& v) { return {v[0], v[1]}; }

  TorqueCommand operator*(double k) const { return {yaw * k, pitch * k}; }
  TorqueCommand operator+(const TorqueCommand& o) const { return {yaw + o.yaw, pitch + o.pitch}; }
  TorqueCommand& operator+=(const TorqueCommand& o) {
    yaw += o.yaw;
    pitch += o.pitch;
    return *this;
  }
  bool operator==(const TorqueCommand&) const = default;
};

struct Tensions {
  std::array<double, kStrings> t{};  // N

  double norm() const { return std::sqrt(t[0] * t[0] + t[1] * t[1] + t[2] * t[2]); }
  double max() const { return std::max({t[0], t[1], t[2]}); }
  Eigen::Vector3d vec() const { return {t[0], t[1], t[2]}; }
  bool operator==(const Tensions&) const = default;
};

struct TensionLimits {
  double t_max = 20.0;  // N per motor
  double slew = 200.0;  // N/s

  bool is_valid() const {
    return std::isfinite(t_max) && std::isfinite(slew) && t_max > 0.0 && slew > 0.0;
  }
};

struct Allocation {
  Tensions tensions;
  TorqueCommand achieved;
  bool clamped = false;
};

inline constexpr int kConeSamples = 360;

/// Largest achievable torque magnitude per whole-degree direction.
struct FeasibleCone {
  std::array<double, kConeSamples> m_max{};  // index = theta in degrees

  /// Linear interpolation between the two nearest 1-degree samples.
  double at(double theta_deg) const {
    double th = std::fmod(theta_deg, 360.0);
    if (th < 0.0) th += 360.0;
    const double floor_deg = std::floor(th);
    const int i0 = static_cast<int>(floor_deg) % kConeSamples;
    const int i1 = (i0 + 1) % kConeSamples;
    const double frac = th - floor_deg;
    return (1.0 - frac) * m_max[i0] + frac * m_max[i1];
  }

  double min() const { return *std::min_element(m_max.begin(), m_max.end()); }
  double max() const { return *std::max_element(m_max.begin(), m_max.end()); }
};

namespace statics_detail {

/// Slack on the box constraints before the result is snapped back inside.
inline double bound_slack(double t_max) { return 1e-12 * std::max(1.0, t_max); }

inline constexpr double kResidualTol = 1e-11;  // N m
inline constexpr double kZeroColumn = 1e-12;   // N m / N
inline constexpr double kRankTol = 1e-9;

/// Bisection width used for cone boundaries; finer than the 1e-6 N m
/// accuracy promised to callers so that derived quantities stay within it.
inline constexpr double kBoundaryTol = 1e-9;

inline Tensions snap_into_box(const Eigen::Vector3d& x, double t_max) {
  Tensions out;
  for (int i = 0; i < kStrings; ++i) out.t[i] = std::clamp(x[i], 0.0, t_max);
  return out;
}

inline bool lex_less(const Tensions& a, const Tensions& b) {
  return std::lexicographical_compare(a.t.begin(), a.t.end(), b.t.begin(), b.t.end());
}

inline std::optional<Tensions> solve_rank2(const MomentMatrix& m, const Eigen::Vector2d& tau,
                                           double t_max) {
  const Eigen::Matrix<double, 2, 3>& a = m.a;
  const Eigen::Vector3d n = Eigen::Vector3d(a.row(0)).cross(Eigen::Vector3d(a.row(1))).normalized();
  const Eigen::Matrix2d gram = a * a.transpose();
  const Eigen::Vector3d tp = a.transpose() * gram.inverse() * tau;

  const double eps = bound_slack(t_max);
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kStrings; ++i) {
    if (std::abs(n[i]) <= 1e-15) {
      if (tp[i] < -eps || tp[i] > t_max + eps) return std::nullopt;
      continue;
    }
    double s_a = (-eps - tp[i]) / n[i];
    double s_b = (t_max + eps - tp[i]) / n[i];
    if (s_a > s_b) std::swap(s_a, s_b);
    lo = std::max(lo, s_a);
    hi = std::min(hi, s_b);
  }
  if (lo > hi) return std::nullopt;
  const double s = std::clamp(0.0, lo, hi);
  return snap_into_box(tp + s * n, t_max);
}

/// Exhaustive free/lower/upper enumeration for rank-deficient matrices.
inline std::optional<Tensions> solve_enumerated(const MomentMatrix& m, const Eigen::Vector2d& tau,
                                                double t_max) {
  const double eps = bound_slack(t_max);
  std::optional<Tensions> best;
  double best_norm = std::numeric_limits<double>::infinity();

  // state per string: 0 free, 1 at zero, 2 at t_max
  for (int code = 0; code < 27; ++code) {
    std::array<int, kStrings> state{code % 3, (code / 3) % 3, code / 9};
    Eigen::Vector3d x = Eigen::Vector3d::Zero();
    Eigen::Vector2d rhs = tau;
    std::array<int, kStrings> free_idx{};
    int n_free = 0;
    for (int i = 0; i < kStrings; ++i) {
      if (state[i] == 2) {
        x[i] = t_max;
        rhs -= m.a.col(i) * t_max;
      } else if (state[i] == 0) {
        free_idx[n_free++] = i;
      }
    }
    if (n_free > 0) {
      Eigen::MatrixXd af(2, n_free);
      for (int k = 0; k < n_free; ++k) af.col(k) = m.a.col(free_idx[k]);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(af, Eigen::ComputeThinU | Eigen::ComputeThinV);
      svd.setThreshold(kRankTol);
      const Eigen::VectorXd xf = svd.solve(rhs);
      for (int k = 0; k < n_free; ++k) x[free_idx[k]] = xf[k];
    }
    if (((m.a * x) - tau).cwiseAbs().maxCoeff() > kResidualTol) continue;
    bool in_box = true;
    for (int i = 0; i < kStrings; ++i) in_box = in_box && x[i] >= -eps && x[i] <= t_max + eps;
    if (!in_box) continue;

    const Tensions cand = snap_into_box(x, t_max);
    const double nrm = cand.norm();
    if (!best || nrm < best_norm - 1e-12 ||
        (std::abs(nrm - best_norm) <= 1e-12 && lex_less(cand, *best))) {
      best = cand;
      best_norm = nrm;
    }
  }
  return best;
}

inline bool has_rank2(const MomentMatrix& m) {
  const Eigen::Vector3d r0 = m.a.row(0);
  const Eigen::Vector3d r1 = m.a.row(1);
  const double scale = r0.norm() * r1.norm();
  return scale > 0.0 && r0.cross(r1).norm() > kRankTol * scale;
}

/// Minimum-norm tensions with A t = tau inside the box, if any exist.
inline std::optional<Tensions> solve_exact(const MomentMatrix& m, const Eigen::Vector2d& tau,
                                           double t_max) {
  if (tau.isZero(0.0)) return Tensions{};
  return has_rank2(m) ? solve_rank2(m, tau, t_max) : solve_enumerated(m, tau, t_max);
}

inline bool column_free(const MomentMatrix& m) {
  return m.a.cwiseAbs().maxCoeff() <= kZeroColumn;
}

/// Largest feasible magnitude along unit direction `dir`, searched in [0, hi].
inline double boundary_along(const MomentMatrix& m, const Eigen::Vector2d& dir, double hi,
                             double t_max, double tol = kBoundaryTol) {
  if (solve_exact(m, hi * dir, t_max)) return hi;
  double lo = 0.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (solve_exact(m, mid * dir, t_max))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

}  // namespace statics_detail

/// tau = A t
inline TorqueCommand forward_torque(const MomentMatrix& m, const Tensions& t) {
  return TorqueCommand::from(m.a * t.vec());
}

inline Allocation allocate_tensions(const MomentMatrix& m, const TorqueCommand& desired,
                                    const TensionLimits& limits) {
  namespace sd = statics_detail;
  if (!m.a.allFinite()) throw std::invalid_argument("moment matrix is not finite");
  if (!desired.is_finite()) throw std::invalid_argument("desired torque is not finite");
  if (!limits.is_valid()) throw std::invalid_argument("tension limits must be positive");

  Allocation out;
  if (desired.is_zero()) return out;
  if (sd::column_free(m))
    throw RankDeficient("moment matrix has no non-zero column; cannot render a torque");

  if (auto t = sd::solve_exact(m, desired.vec(), limits.t_max)) {
    out.tensions = *t;
    out.achieved = forward_torque(m, out.tensions);
    return out;
  }

  // Scale the command radially down to the cone boundary.
  const double mag = desired.magnitude();
  const Eigen::Vector2d dir = desired.vec() / mag;
  const double reach = sd::boundary_along(m, dir, mag, limits.t_max);
  out.tensions = sd::solve_exact(m, reach * dir, limits.t_max).value_or(Tensions{});
  out.achieved = forward_torque(m, out.tensions);
  out.clamped = true;
  return out;
}

/// Upper bound on any achievable torque magnitude: t_max * sum of column norms.
inline double torque_reach_bound(const MomentMatrix& m, double t_max) {
  double s = 0.0;
  for (int i = 0; i < kStrings; ++i) s += m.a.col(i).norm();
  return s * t_max;
}

inline FeasibleCone feasible_cone(const MomentMatrix& m, const TensionLimits& limits) {
  if (!m.a.allFinite()) throw std::invalid_argument("moment matrix is not finite");
  if (!limits.is_valid()) throw std::invalid_argument("tension limits must be positive");
  FeasibleCone cone;
  const double hi = torque_reach_bound(m, limits.t_max);
  if (statics_detail::column_free(m) || hi == 0.0) return cone;
  for (int deg = 0; deg < kConeSamples; ++deg) {
    const double a = deg_to_rad(deg);
    cone.m_max[deg] = statics_detail::boundary_along(m, {std::cos(a), std::sin(a)}, hi,
                                                     limits.t_max);
  }
  return cone;
}

/// Shrinks `desired` along its own direction to the interpolated cone radius.
inline TorqueCommand clamp_to_feasible(const TorqueCommand& desired, const FeasibleCone& cone) {
  const double mag = desired.magnitude();
  if (mag == 0.0) return desired;
  const double limit = cone.at(desired.theta_deg());
  if (mag <= limit) return desired;
  return desired * (limit / mag);
}

}  // namespace wristhap
