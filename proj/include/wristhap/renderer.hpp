#pragma once

// Fixed-rate rendering loop. Each tick: activate due events, mix the active
// effects, clamp to the feasible cone, allocate tensions, step the motors and
// record one TraceRow. Runs in simulation time and is fully deterministic
// given the scenario (including its seed).

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "wristhap/actuation.hpp"
#include "wristhap/effects.hpp"
#include "wristhap/errors.hpp"
#include "wristhap/geometry.hpp"
#include "wristhap/statics.hpp"
#include "wristhap/text.hpp"

namespace wristhap {

struct FireWeaponEvent {
  WeaponKind weapon = WeaponKind::pistol;
  int shots = 1;
};

struct ShieldImpactEvent {
  double u = 0.0;  // normalized contact, [-1, 1]
  double v = 0.0;
  BulletClass bullet = BulletClass::red;
};

struct VibrationEvent {
  double freq = 0.0;
  double amplitude = 0.0;
  double theta_deg = 0.0;
  double duration = 0.0;
};

/// Replaces the held background torque.
struct SetTorqueEvent {
  TorqueCommand torque;
};

struct Event {
  double time = 0.0;
  std::variant<FireWeaponEvent, ShieldImpactEvent, VibrationEvent, SetTorqueEvent> body;
  int line = 0;  // config line, 0 when not from a file

  std::string_view name() const {
    static constexpr std::array<std::string_view, 4> kNames{"fire_weapon", "shield_impact",
                                                            "vibration", "set_torque"};
    return kNames[body.index()];
  }
};

/// Time-ordered event queue; equal timestamps keep insertion order.
class EventQueue {
 public:
  explicit EventQueue(double now = 0.0) : now_(now) {}

  void schedule(Event e) {
    if (!(e.time >= now_))
      throw PastEvent(std::string(e.name()) + " at t=" + text::format_double(e.time) +
                      " is before current time " + text::format_double(now_));
    auto pos = std::upper_bound(events_.begin(), events_.end(), e.time,
                                [](double t, const Event& x) { return t < x.time; });
    events_.insert(pos, std::move(e));
  }

  /// Removes every event with time <= t and advances the clock to t.
  std::vector<Event> pop_due(double t) {
    std::vector<Event> out;
    while (!events_.empty() && events_.front().time <= t) {
      out.push_back(std::move(events_.front()));
      events_.pop_front();
    }
    now_ = std::max(now_, t);
    return out;
  }

  std::optional<Event> pop() {
    if (events_.empty()) return std::nullopt;
    Event e = std::move(events_.front());
    events_.pop_front();
    return e;
  }

  void advance_to(double t) { now_ = std::max(now_, t); }

  double now() const { return now_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }

 private:
  std::deque<Event> events_;
  double now_;
};

inline EventQueue schedule_event(EventQueue queue, Event event) {
  queue.schedule(std::move(event));
  return queue;
}

/// Hand-off point for one producer thread feeding events to the loop; the
/// loop drains it at tick boundaries.
class EventInbox {
 public:
  void push(Event e) {
    std::lock_guard lock(mu_);
    pending_.push_back(std::move(e));
  }

  std::vector<Event> drain() {
    std::lock_guard lock(mu_);
    return std::exchange(pending_, {});
  }

 private:
  std::mutex mu_;
  std::vector<Event> pending_;
};

struct Scenario {
  LayoutConfig layout = canonical_layout();
  MotorParams motor;
  TensionLimits limits;
  double rate = 1000.0;     // Hz
  double duration = 10.0;   // s
  std::uint64_t seed = 0;
  int telemetry_decimation = 10;
  std::array<WeaponSpec, 3> weapons{default_weapon(WeaponKind::pistol),
                                    default_weapon(WeaponKind::rifle),
                                    default_weapon(WeaponKind::shotgun)};
  std::array<BulletSpec, 2> bullets{default_bullet(BulletClass::red),
                                    default_bullet(BulletClass::blue)};
  ShieldModel shield;
  std::vector<Event> timeline;

  const WeaponSpec& weapon(WeaponKind k) const { return weapons[static_cast<int>(k)]; }
  const BulletSpec& bullet(BulletClass c) const { return bullets[static_cast<int>(c)]; }
};

/// A scenario invariant violation; `where` is a dotted config path such as
/// "motor.t_max" or "timeline[2]".
struct Violation {
  std::string where;
  std::string what;
};

inline std::vector<Violation> event_violations(const Event& e, const Scenario& s) {
  std::vector<Violation> out;
  auto bad = [&](std::string what) { out.push_back({"event", std::move(what)}); };
  if (!std::isfinite(e.time)) bad("timestamp is not finite");
  std::visit(
      [&](const auto& b) {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, FireWeaponEvent>) {
          if (b.shots < 1) bad("shots must be >= 1");
          if (b.shots > 1 && !s.weapon(b.weapon).auto_interval)
            bad(std::string(to_string(b.weapon)) + " has no auto_interval; shots must be 1");
        } else if constexpr (std::is_same_v<B, ShieldImpactEvent>) {
          if (!(std::abs(b.u) <= 1.0) || !(std::abs(b.v) <= 1.0))
            bad("contact (u, v) must lie in [-1, 1]^2");
        } else if constexpr (std::is_same_v<B, VibrationEvent>) {
          if (!(b.freq > 0.0) || !std::isfinite(b.freq)) bad("freq must be > 0");
          if (!(b.amplitude >= 0.0) || !std::isfinite(b.amplitude)) bad("amplitude must be >= 0");
          if (!(b.duration > 0.0) || !std::isfinite(b.duration)) bad("duration must be > 0");
          if (!std::isfinite(b.theta_deg)) bad("theta must be finite");
        } else {
          if (!b.torque.is_finite()) bad("torque must be finite");
        }
      },
      e.body);
  return out;
}

inline std::vector<Violation> scenario_violations(const Scenario& s) {
  std::vector<Violation> out;
  auto bad = [&](std::string where, std::string what) {
    out.push_back({std::move(where), std::move(what)});
  };

  if (!(s.rate > 0.0) || !std::isfinite(s.rate)) bad("scenario.rate", "rate must be > 0");
  if (!(s.duration > 0.0) || !std::isfinite(s.duration))
    bad("scenario.duration", "duration must be > 0");
  if (s.telemetry_decimation < 1)
    bad("scenario.telemetry_decimation", "telemetry_decimation must be >= 1");

  for (auto& v : layout_violations(s.layout)) bad("layout", v);

  if (!s.motor.is_valid()) bad("motor", "spool_radius, slew and t_max must all be > 0");
  if (!s.limits.is_valid()) bad("limits", "t_max and slew must be > 0");
  if (s.limits.is_valid() && s.motor.is_valid() && s.limits.t_max > s.motor.t_max)
    bad("limits.t_max", "allocation limit exceeds motor t_max");

  for (auto w : kAllWeapons) {
    const auto& spec = s.weapon(w);
    if (!spec.is_valid())
      bad("weapon." + std::string(to_string(w)),
          "peak and decay_tau must be > 0, auto_interval > 0 when set, jitter_std >= 0");
  }
  const auto& red = s.bullet(BulletClass::red);
  const auto& blue = s.bullet(BulletClass::blue);
  for (const auto* b : {&red, &blue})
    if (!(b->impact_force > 0.0) || !(b->radius > 0.0) || !std::isfinite(b->impact_force) ||
        !std::isfinite(b->radius))
      bad("bullet." + std::string(to_string(b->cls)), "impact_force and radius must be > 0");
  if (!(blue.impact_force > red.impact_force))
    bad("bullet.blue.impact_force", "blue bullets must hit harder than red");
  if (!(blue.radius > red.radius)) bad("bullet.blue.radius", "blue bullets must be larger than red");
  if (!s.shield.is_valid())
    bad("shield", "normal must be a unit vector and half_extent > 0");

  for (std::size_t i = 0; i < s.timeline.size(); ++i) {
    const Event& e = s.timeline[i];
    const std::string where = "timeline[" + std::to_string(i) + "]";
    const std::string label = std::string(e.name()) + " at t=" + text::format_double(e.time);
    if (i > 0 && e.time < s.timeline[i - 1].time)
      bad(where, label + " is out of order (previous event at t=" +
                     text::format_double(s.timeline[i - 1].time) + ")");
    if (!(e.time >= 0.0) || (std::isfinite(s.duration) && e.time > s.duration))
      bad(where, label + " lies outside [0, duration]");
    for (auto& v : event_violations(e, s)) bad(where, label + ": " + v.what);
  }
  return out;
}

struct TraceRow {
  double t = 0.0;
  TorqueCommand desired;
  TorqueCommand clamped_torque;
  Tensions commanded;
  Tensions actual;
  TorqueCommand achieved;
  bool clamped = false;
  std::array<bool, kStrings> saturated{};

  bool operator==(const TraceRow&) const = default;
};

using Trace = std::vector<TraceRow>;

/// Number of ticks for `duration` at `rate`; products within 1e-9 of an
/// integer count as that integer.
inline std::size_t tick_count(double duration, double rate) {
  const double x = duration * rate;
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9) return static_cast<std::size_t>(r);
  return static_cast<std::size_t>(std::ceil(x));
}

/// Per-shot generator seed; depends only on the scenario seed, the weapon and
/// the trigger time, so it is independent of the order events arrive in.
inline std::uint64_t shot_seed(std::uint64_t scenario_seed, WeaponKind w, double trigger) {
  auto splitmix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  std::uint64_t h = splitmix(scenario_seed);
  h = splitmix(h ^ static_cast<std::uint64_t>(w));
  return splitmix(h ^ std::bit_cast<std::uint64_t>(trigger));
}

class Renderer {
 public:
  explicit Renderer(Scenario s) : scenario_(std::move(s)) {
    auto violations = scenario_violations(scenario_);
    if (!violations.empty()) {
      std::string msg = "invalid scenario:";
      for (auto& v : violations) msg += "\n  " + v.where + ": " + v.what;
      throw ConfigError(msg);
    }
    moments_ = moment_matrix(scenario_.layout, Pose::identity());
    cone_ = feasible_cone(moments_, scenario_.limits);
    total_ticks_ = tick_count(scenario_.duration, scenario_.rate);
    dt_ = 1.0 / scenario_.rate;
    for (const auto& e : scenario_.timeline) queue_.schedule(e);
  }

  /// Adds an event at or after the next tick time.
  void schedule(Event e) {
    auto violations = event_violations(e, scenario_);
    if (!violations.empty()) throw ConfigError(std::string(e.name()) + ": " + violations[0].what);
    queue_.schedule(std::move(e));
  }

  bool finished() const { return tick_ >= total_ticks_; }
  std::size_t ticks_done() const { return tick_; }
  std::size_t total_ticks() const { return total_ticks_; }
  double next_time() const { return static_cast<double>(tick_) / scenario_.rate; }

  const Scenario& scenario() const { return scenario_; }
  const MomentMatrix& moments() const { return moments_; }
  const FeasibleCone& cone() const { return cone_; }
  const DeviceState& device() const { return device_; }

  TraceRow tick() {
    const double t = next_time();
    for (auto& e : queue_.pop_due(t)) activate(e);

    TraceRow row;
    row.t = t;
    row.desired = held_ + mix_effects(active_, t);
    std::erase_if(active_, [t](const Effect& e) { return e.end() <= t; });

    row.clamped_torque = clamp_to_feasible(row.desired, cone_);
    const Allocation alloc = allocate_tensions(moments_, row.clamped_torque, scenario_.limits);
    const DeviceStep step = simulate_device(device_, alloc.tensions, dt_, moments_, scenario_.motor);
    device_ = step.state;

    row.commanded = alloc.tensions;
    row.actual = device_.actual_tensions();
    row.achieved = step.applied;
    row.clamped = alloc.clamped || !(row.clamped_torque == row.desired);
    for (int i = 0; i < kStrings; ++i) row.saturated[i] = device_.motors[i].saturated;

    ++tick_;
    queue_.advance_to(next_time());
    return row;
  }

  Trace run() {
    Trace out;
    out.reserve(total_ticks_ - std::min(tick_, total_ticks_));
    while (!finished()) out.push_back(tick());
    return out;
  }

 private:
  void activate(const Event& e) {
    std::visit(
        [&](const auto& b) {
          using B = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<B, FireWeaponEvent>) {
            const auto seed = shot_seed(scenario_.seed, b.weapon, e.time);
            for (auto& fx : recoil_effect(scenario_.weapon(b.weapon), e.time, seed, b.shots))
              insert_effect(std::move(fx));
          } else if constexpr (std::is_same_v<B, ShieldImpactEvent>) {
            const auto& sh = scenario_.shield;
            insert_effect(shield_impact_effect(sh.contact_point(b.u, b.v),
                                               scenario_.bullet(b.bullet), -sh.normal, e.time, sh,
                                               scenario_.layout.wrist_pivot));
          } else if constexpr (std::is_same_v<B, VibrationEvent>) {
            insert_effect(vibration_effect(b.freq, b.amplitude, b.theta_deg, e.time, b.duration));
          } else {
            held_ = b.torque;
          }
        },
        e.body);
  }

  // Active effects stay sorted by start time so the mixed sum does not depend
  // on whether an effect train arrived as one event or shot by shot.
  void insert_effect(Effect fx) {
    auto pos = std::upper_bound(active_.begin(), active_.end(), fx.start,
                                [](double s, const Effect& x) { return s < x.start; });
    active_.insert(pos, std::move(fx));
  }

  Scenario scenario_;
  MomentMatrix moments_;
  FeasibleCone cone_;
  std::size_t total_ticks_ = 0;
  double dt_ = 0.0;
  std::size_t tick_ = 0;
  EventQueue queue_;
  std::vector<Effect> active_;
  TorqueCommand held_;
  DeviceState device_;
};

inline Trace run_loop(const Scenario& s) { return Renderer(s).run(); }

struct TraceSummary {
  std::size_t rows = 0;
  double peak_desired = 0.0;   // N m
  double peak_achieved = 0.0;  // N m
  std::size_t clamp_count = 0;
  std::size_t saturation_count = 0;  // rows with any saturated motor
};

inline TraceSummary summarize(const Trace& trace) {
  TraceSummary s;
  s.rows = trace.size();
  for (const auto& r : trace) {
    s.peak_desired = std::max(s.peak_desired, r.desired.magnitude());
    s.peak_achieved = std::max(s.peak_achieved, r.achieved.magnitude());
    s.clamp_count += r.clamped ? 1 : 0;
    s.saturation_count += (r.saturated[0] || r.saturated[1] || r.saturated[2]) ? 1 : 0;
  }
  return s;
}

}  // namespace wristhap
