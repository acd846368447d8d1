#include <catch_amalgamated.hpp>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "wristhap/actuation.hpp"

using namespace wristhap;
using Catch::Matchers::WithinAbs;

TEST_CASE("step_motor: fixed point", "[actuation]") {
  MotorState s;
  s.actual_tension = 5.0;
  s.commanded_tension = 5.0;
  const auto n = step_motor(s, 5.0, 0.001, {});
  CHECK(n == s);
  CHECK_FALSE(n.saturated);
}

TEST_CASE("step_motor: slew arithmetic", "[actuation]") {
  const MotorParams p{0.01, 20.0, 20.0};
  const auto n = step_motor(MotorState{}, 10.0, 0.1, p);
  CHECK_THAT(n.actual_tension, WithinAbs(2.0, 1e-15));
  CHECK(n.saturated);
  CHECK(n.commanded_tension == 10.0);
  CHECK_THAT(n.spool_angle, WithinAbs(2.0 / (kStringTakeUpStiffness * 0.01), 1e-15));
}

TEST_CASE("step_motor: commands outside the tension range", "[actuation]") {
  MotorState s;
  s.actual_tension = 0.1;
  const auto low = step_motor(s, -3.0, 0.001, {});
  CHECK(low.actual_tension == 0.0);
  CHECK(low.saturated);

  s.actual_tension = 19.95;
  const auto high = step_motor(s, 25.0, 0.001, {});
  CHECK(high.actual_tension == 20.0);
  CHECK(high.saturated);
}

TEST_CASE("step_motor: rejects bad inputs", "[actuation]") {
  CHECK_THROWS_AS(step_motor({}, 1.0, 0.0, {}), std::invalid_argument);
  CHECK_THROWS_AS(step_motor({}, 1.0, -1e-3, {}), std::invalid_argument);
  CHECK_THROWS_AS(step_motor({}, std::numeric_limits<double>::infinity(), 1e-3, {}),
                  std::invalid_argument);
}

TEST_CASE("step_motor: ramp tracks within the slew bound", "[actuation]") {
  const MotorParams p;
  const double dt = 1e-3;
  MotorState s;
  double ref = 0.0;
  for (int k = 0; k < 1000; ++k) {
    // ramp that outruns the slew limit half way through
    const double cmd = k < 500 ? 0.05 * k : 25.0 + 0.5 * (k - 500);
    const auto n = step_motor(s, cmd, dt, p);
    ref = oracle::slew_follow(ref, cmd, p.slew, dt, p.t_max);
    REQUIRE(std::abs(n.actual_tension - s.actual_tension) <= p.slew * dt + 1e-12);
    REQUIRE(n.actual_tension >= 0.0);
    REQUIRE(n.actual_tension <= p.t_max);
    REQUIRE_THAT(n.actual_tension, WithinAbs(ref, 1e-12));
    s = n;
  }
}

TEST_CASE("simulate_device: zero commands from rest", "[actuation]") {
  const auto m = moment_matrix(canonical_layout(), Pose::identity());
  const auto r = simulate_device({}, Tensions{}, 1e-3, m, {});
  CHECK(r.applied == TorqueCommand{});
  CHECK_THAT(r.state.time, WithinAbs(1e-3, 1e-18));
}

TEST_CASE("simulate_device: held command converges to the allocation", "[actuation]") {
  const auto m = moment_matrix(canonical_layout(), Pose::identity());
  const MotorParams p;
  const auto alloc = allocate_tensions(m, TorqueCommand::polar(75.0, 0.4), {p.t_max, p.slew});
  REQUIRE_FALSE(alloc.clamped);
  const double dt = 1e-3;
  const int horizon = static_cast<int>(std::ceil(p.t_max / p.slew / dt));
  DeviceState d;
  TorqueCommand applied;
  for (int k = 0; k < horizon + 50; ++k) {
    const auto r = simulate_device(d, alloc.tensions, dt, m, p);
    d = r.state;
    applied = r.applied;
    if (k >= horizon) {
      REQUIRE_THAT(applied.yaw, WithinAbs(alloc.achieved.yaw, 1e-9));
      REQUIRE_THAT(applied.pitch, WithinAbs(alloc.achieved.pitch, 1e-9));
    }
  }
}

TEST_CASE("simulate_device: step sequence matches a scalar replay", "[actuation]") {
  const auto m = moment_matrix(canonical_layout(), Pose::identity());
  const auto cols = fixtures::to_mat23(m);
  const MotorParams p;
  const double dt = 1e-3;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> level(-2.0, 24.0);

  DeviceState d;
  std::array<double, 3> ref{};
  Tensions cmd;
  for (int k = 0; k < 2000; ++k) {
    if (k % 37 == 0)
      for (double& c : cmd.t) c = level(rng);
    const auto r = simulate_device(d, cmd, dt, m, p);
    double yaw = 0.0, pitch = 0.0;
    for (int i = 0; i < 3; ++i) {
      ref[i] = oracle::slew_follow(ref[i], cmd.t[i], p.slew, dt, p.t_max);
      yaw += cols[i][0] * ref[i];
      pitch += cols[i][1] * ref[i];
    }
    for (int i = 0; i < 3; ++i) {
      REQUIRE(std::abs(r.state.motors[i].actual_tension - d.motors[i].actual_tension) <=
              p.slew * dt + 1e-12);
      REQUIRE_THAT(r.state.motors[i].actual_tension, WithinAbs(ref[i], 1e-12));
    }
    REQUIRE_THAT(r.applied.yaw, WithinAbs(yaw, 1e-12));
    REQUIRE_THAT(r.applied.pitch, WithinAbs(pitch, 1e-12));
    REQUIRE(r.state.time >= d.time);
    d = r.state;
  }
}

TEST_CASE("simulate_device is bit-for-bit deterministic", "[actuation]") {
  const auto m = moment_matrix(canonical_layout(), Pose::identity());
  auto run = [&] {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> level(0.0, 20.0);
    DeviceState d;
    for (int k = 0; k < 500; ++k) d = simulate_device(d, {{level(rng), level(rng), level(rng)}},
                                                      1e-3, m, {}).state;
    return d;
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.motors == b.motors);
  CHECK(a.time == b.time);
}
