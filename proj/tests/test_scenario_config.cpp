#include <catch_amalgamated.hpp>

#include <random>

#include "wristhap/scenario_config.hpp"

using namespace wristhap;
using Catch::Matchers::ContainsSubstring;

namespace {

std::string source_path(const std::string& rel) {
  return std::string(WRISTHAP_SOURCE_DIR) + "/" + rel;
}

bool mentions_line(const ParsedScenario& p, int line) {
  for (const auto& d : p.diagnostics)
    if (d.line == line) return true;
  return false;
}

}  // namespace

TEST_CASE("shipped scenarios parse cleanly", "[scenario_config]") {
  for (const char* name : {"scenarios/shooting.scn", "scenarios/shielding.scn",
                           "scenarios/golden.scn"}) {
    INFO(name);
    const auto p = parse_scenario(read_text_file(source_path(name)));
    CHECK(format_diagnostics(name, p.diagnostics) == "");
  }
}

TEST_CASE("empty file gives the default scenario", "[scenario_config]") {
  const auto p = parse_scenario("");
  REQUIRE(p.ok());
  CHECK(p.scenario.rate == 1000.0);
  CHECK(p.scenario.duration == 10.0);
  CHECK(p.scenario.timeline.empty());
}

TEST_CASE("every section and key is read", "[scenario_config]") {
  const auto p = parse_scenario(R"(# full example
[scenario]
rate = 500
duration = 2.5
seed = 18446744073709551615
telemetry_decimation = 4

[layout]
handle_anchors = 0 0.03 0.05; 0.01,-0.02,0.05 ; -0.01 -0.02 0.05
motor_exits = 0 0.04 -0.05; 0.02 -0.03 -0.05; -0.02 -0.03 -0.05
wrist_pivot = 0 0 0.001
string_map = 2 0 1

[motor]
t_max = 25
slew = 150
spool_radius = 0.012

[limits]
t_max = 18
slew = 150

[weapon.rifle]
peak = 0.7
decay_tau = 0.02
auto_interval = 0.08

[weapon.pistol]
auto_interval = none
jitter_std = 1.5

[bullet.blue]
impact_force = 60
radius = 0.05

[shield]
center = 0 0 0.2
normal = 0 0 2
half_extent = 0.1

[timeline]
0.1 fire_weapon weapon=rifle shots=3
0.2 shield_impact u=0.5 v=-1 bullet=blue
0.3 vibration freq=20 amplitude=0.1 theta=45 duration=0.25
0.4 set_torque theta=90 magnitude=0.2
0.5 set_torque yaw=0.1 pitch=-0.1
)");
  REQUIRE(format_diagnostics("x", p.diagnostics) == "");
  const Scenario& s = p.scenario;
  CHECK(s.rate == 500.0);
  CHECK(s.duration == 2.5);
  CHECK(s.seed == 18446744073709551615ULL);
  CHECK(s.telemetry_decimation == 4);
  CHECK(s.layout.handle_anchors[1] == Vec3(0.01, -0.02, 0.05));
  CHECK(s.layout.wrist_pivot == Vec3(0, 0, 0.001));
  CHECK(s.layout.string_map == std::array<int, 3>{2, 0, 1});
  CHECK(s.motor.t_max == 25.0);
  CHECK(s.motor.spool_radius == 0.012);
  CHECK(s.limits.t_max == 18.0);
  CHECK(s.weapon(WeaponKind::rifle).peak == 0.7);
  CHECK(s.weapon(WeaponKind::rifle).auto_interval == 0.08);
  CHECK(s.weapon(WeaponKind::pistol).direction_jitter_std == 1.5);
  CHECK(s.bullet(BulletClass::blue).impact_force == 60.0);
  CHECK(s.shield.normal == Vec3(0, 0, 1));
  REQUIRE(s.timeline.size() == 5);
  CHECK(std::get<FireWeaponEvent>(s.timeline[0].body).shots == 3);
  CHECK(std::get<ShieldImpactEvent>(s.timeline[1].body).bullet == BulletClass::blue);
  CHECK(std::get<VibrationEvent>(s.timeline[2].body).theta_deg == 45.0);
  CHECK(std::get<SetTorqueEvent>(s.timeline[3].body).torque.pitch == 0.2);
  CHECK(std::get<SetTorqueEvent>(s.timeline[4].body).torque == TorqueCommand{0.1, -0.1});
  CHECK(s.timeline[4].line == 46);
}

TEST_CASE("out-of-order timeline names the offending event", "[scenario_config]") {
  const auto p = parse_scenario("[timeline]\n2.0 fire_weapon weapon=pistol\n"
                                "1.0 shield_impact u=0 v=0 bullet=red\n");
  REQUIRE(p.diagnostics.size() == 1);
  CHECK(p.diagnostics[0].line == 3);
  CHECK_THAT(p.diagnostics[0].message, ContainsSubstring("shield_impact at t=1"));
  CHECK_THAT(p.diagnostics[0].message, ContainsSubstring("out of order"));
}

TEST_CASE("every violation is reported with its line", "[scenario_config]") {
  const auto p = parse_scenario(R"([scenario]
rate = -5
bogus = 1
[motor]
t_max = abc
[layout]
motor_exits = 0 0 0; 0 0 0; 1 1 1
[weapon.pistol]
peak = 0
[laser]
power = 3
[timeline]
1 fire_weapon weapon=pistol shots=2
2 shield_impact u=3 v=0 bullet=red
3 fire_weapon weapon=bazooka
4 vibration freq=10
20 set_torque yaw=1 pitch=0
)");
  CHECK(mentions_line(p, 2));   // rate
  CHECK(mentions_line(p, 3));   // unknown key
  CHECK(mentions_line(p, 5));   // not a number
  CHECK(mentions_line(p, 7));   // duplicate exits
  CHECK(mentions_line(p, 9));   // peak
  CHECK(mentions_line(p, 10));  // unknown section
  CHECK_FALSE(mentions_line(p, 11));
  CHECK(mentions_line(p, 13));  // pistol burst
  CHECK(mentions_line(p, 14));  // contact off the plate
  CHECK(mentions_line(p, 15));  // unknown weapon
  CHECK(mentions_line(p, 16));  // missing arguments
  CHECK(mentions_line(p, 17));  // after duration
}

TEST_CASE("syntax errors", "[scenario_config]") {
  CHECK(mentions_line(parse_scenario("rate = 5\n"), 1));
  CHECK(mentions_line(parse_scenario("[scenario\nrate = 5\n"), 1));
  CHECK(mentions_line(parse_scenario("[scenario]\nrate 5\n"), 2));
  CHECK(mentions_line(parse_scenario("[scenario]\nrate = 5\nrate = 6\n"), 3));
  CHECK(mentions_line(parse_scenario("[scenario]\n[scenario]\n"), 2));
  CHECK(mentions_line(parse_scenario("[timeline]\n1 fire_weapon weapon=pistol x\n"), 2));
  CHECK(mentions_line(parse_scenario("[timeline]\n1 fire_weapon weapon=pistol zoom=2\n"), 2));
  CHECK(mentions_line(parse_scenario("[timeline]\nsoon fire_weapon weapon=pistol\n"), 2));
  CHECK(mentions_line(parse_scenario("[scenario]\nseed = -1\n"), 2));
  CHECK(mentions_line(parse_scenario("[shield]\nnormal = 0 0 0\n"), 2));
  CHECK(parse_scenario("[scenario]\nrate = 5 # trailing comment\n").ok());
}

TEST_CASE("load_scenario errors", "[scenario_config]") {
  CHECK_THROWS_AS(load_scenario(source_path("scenarios/does-not-exist.scn")), IoError);
}

TEST_CASE("fuzzed configs never crash the parser", "[scenario_config]") {
  const std::string base = read_text_file(source_path("scenarios/shielding.scn")) +
                           read_text_file(source_path("scenarios/golden.scn"));
  const std::string alphabet = "[]=#.;, \n\t-+0123456789eabcdefuvxyz_";
  std::mt19937_64 rng(0xF022);
  std::uniform_int_distribution<int> op(0, 2);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  for (int trial = 0; trial < 2000; ++trial) {
    std::string s = base;
    std::uniform_int_distribution<int> edits(1, 12);
    for (int k = edits(rng); k > 0; --k) {
      std::uniform_int_distribution<std::size_t> at(0, s.size() - 1);
      const auto i = at(rng);
      switch (op(rng)) {
        case 0: s[i] = alphabet[pick(rng)]; break;
        case 1: s.erase(i, 1); break;
        default: s.insert(i, 1, alphabet[pick(rng)]); break;
      }
    }
    const auto p = parse_scenario(s);
    for (const auto& d : p.diagnostics) REQUIRE_FALSE(d.message.empty());
    if (p.ok()) REQUIRE(scenario_violations(p.scenario).empty());
  }
}
