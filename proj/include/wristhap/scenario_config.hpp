#pragma once

// Line-oriented scenario files. See docs/scenario-format.md.
//
//   # comment
//   [section]
//   key = value
//   [timeline]
//   <time> <event> key=value ...

#include <array>
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wristhap/errors.hpp"
#include "wristhap/renderer.hpp"
#include "wristhap/text.hpp"

namespace wristhap {

struct Diagnostic {
  int line = 0;  // 0 when the problem has no single source line
  std::string message;
};

struct ParsedScenario {
  Scenario scenario;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return diagnostics.empty(); }
};

inline std::string format_diagnostics(std::string_view source,
                                      const std::vector<Diagnostic>& diags) {
  std::string out;
  for (const auto& d : diags) {
    out += source;
    if (d.line > 0) out += ":" + std::to_string(d.line);
    out += ": " + d.message + "\n";
  }
  return out;
}

namespace config_detail {

class Parser {
 public:
  ParsedScenario run(std::string_view src) {
    int lineno = 0;
    std::size_t pos = 0;
    while (pos <= src.size()) {
      const auto nl = src.find('\n', pos);
      std::string_view raw = src.substr(pos, nl == src.npos ? src.npos : nl - pos);
      ++lineno;
      handle_line(raw, lineno);
      if (nl == src.npos) break;
      pos = nl + 1;
    }
    validate();
    return std::move(out_);
  }

 private:
  using Handler = std::function<void(std::string_view, int)>;

  void error(int line, std::string msg) { out_.diagnostics.push_back({line, std::move(msg)}); }

  void handle_line(std::string_view raw, int line) {
    if (auto hash = raw.find('#'); hash != raw.npos) raw = raw.substr(0, hash);
    const auto s = text::trim(raw);
    if (s.empty()) return;

    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) {
        error(line, "malformed section header '" + std::string(s) + "'");
        section_ = "?";
        return;
      }
      section_ = std::string(text::trim(s.substr(1, s.size() - 2)));
      if (!known_section(section_)) {
        error(line, "unknown section [" + section_ + "]");
        section_ = "?";
        return;
      }
      if (!section_lines_.emplace(section_, line).second) {
        error(line, "duplicate section [" + section_ + "]");
      }
      return;
    }

    if (section_.empty()) {
      error(line, "content before the first [section]");
      return;
    }
    if (section_ == "?") return;  // already reported
    if (section_ == "timeline") {
      timeline_line(s, line);
      return;
    }

    const auto eq = s.find('=');
    if (eq == s.npos) {
      error(line, "expected 'key = value'");
      return;
    }
    const std::string key(text::trim(s.substr(0, eq)));
    const auto value = text::trim(s.substr(eq + 1));
    const std::string path = section_ + "." + key;
    if (key.empty()) {
      error(line, "missing key before '='");
      return;
    }
    auto& handlers = section_handlers();
    auto it = handlers.find(path);
    if (it == handlers.end()) {
      error(line, "unknown key '" + key + "' in [" + section_ + "]");
      return;
    }
    if (!key_lines_.emplace(path, line).second) {
      error(line, "duplicate key '" + key + "' in [" + section_ + "]");
      return;
    }
    it->second(value, line);
  }

  static bool known_section(const std::string& s) {
    static const std::set<std::string> kSections{
        "scenario",     "layout",      "motor",         "limits",    "weapon.pistol",
        "weapon.rifle", "weapon.shotgun", "bullet.red", "bullet.blue", "shield",
        "timeline"};
    return kSections.count(s) > 0;
  }

  // value readers ---------------------------------------------------------

  bool number(std::string_view v, int line, double& dst) {
    if (auto d = text::parse_finite(v)) {
      dst = *d;
      return true;
    }
    error(line, "expected a number, got '" + std::string(v) + "'");
    return false;
  }

  bool vec3(std::string_view v, int line, Vec3& dst) {
    std::string tmp(v);
    for (char& c : tmp)
      if (c == ',') c = ' ';
    const auto w = text::words(tmp);
    if (w.size() != 3) {
      error(line, "expected three numbers 'x y z', got '" + std::string(v) + "'");
      return false;
    }
    Vec3 out;
    for (int i = 0; i < 3; ++i) {
      auto d = text::parse_finite(w[i]);
      if (!d) {
        error(line, "bad coordinate '" + std::string(w[i]) + "'");
        return false;
      }
      out[i] = *d;
    }
    dst = out;
    return true;
  }

  bool vec3x3(std::string_view v, int line, std::array<Vec3, kStrings>& dst) {
    const auto parts = text::split(v, ';');
    if (parts.size() != kStrings) {
      error(line, "expected three points separated by ';'");
      return false;
    }
    std::array<Vec3, kStrings> out;
    for (int i = 0; i < kStrings; ++i)
      if (!vec3(parts[i], line, out[i])) return false;
    dst = out;
    return true;
  }

  const std::map<std::string, Handler>& section_handlers() {
    if (!handlers_.empty()) return handlers_;
    Scenario& s = out_.scenario;
    auto num = [this](double& dst) {
      return [this, &dst](std::string_view v, int line) { number(v, line, dst); };
    };
    handlers_["scenario.rate"] = num(s.rate);
    handlers_["scenario.duration"] = num(s.duration);
    handlers_["scenario.seed"] = [this, &s](std::string_view v, int line) {
      if (auto x = text::parse_int<std::uint64_t>(v))
        s.seed = *x;
      else
        error(line, "seed must be an unsigned 64-bit integer");
    };
    handlers_["scenario.telemetry_decimation"] = [this, &s](std::string_view v, int line) {
      if (auto x = text::parse_int<int>(v))
        s.telemetry_decimation = *x;
      else
        error(line, "telemetry_decimation must be an integer");
    };

    handlers_["layout.handle_anchors"] = [this, &s](std::string_view v, int line) {
      vec3x3(v, line, s.layout.handle_anchors);
    };
    handlers_["layout.motor_exits"] = [this, &s](std::string_view v, int line) {
      vec3x3(v, line, s.layout.motor_exits);
    };
    handlers_["layout.wrist_pivot"] = [this, &s](std::string_view v, int line) {
      vec3(v, line, s.layout.wrist_pivot);
    };
    handlers_["layout.string_map"] = [this, &s](std::string_view v, int line) {
      const auto w = text::words(v);
      std::array<int, kStrings> m{};
      bool ok = w.size() == kStrings;
      for (std::size_t i = 0; ok && i < w.size(); ++i) {
        auto x = text::parse_int<int>(w[i]);
        ok = x.has_value();
        if (ok) m[i] = *x;
      }
      if (ok)
        s.layout.string_map = m;
      else
        error(line, "string_map must be three integers, e.g. '0 1 2'");
    };

    handlers_["motor.t_max"] = num(s.motor.t_max);
    handlers_["motor.slew"] = num(s.motor.slew);
    handlers_["motor.spool_radius"] = num(s.motor.spool_radius);
    handlers_["limits.t_max"] = num(s.limits.t_max);
    handlers_["limits.slew"] = num(s.limits.slew);

    for (auto w : kAllWeapons) {
      const std::string sec = "weapon." + std::string(to_string(w));
      WeaponSpec& spec = s.weapons[static_cast<int>(w)];
      handlers_[sec + ".peak"] = num(spec.peak);
      handlers_[sec + ".decay_tau"] = num(spec.decay_tau);
      handlers_[sec + ".jitter_std"] = num(spec.direction_jitter_std);
      handlers_[sec + ".auto_interval"] = [this, &spec](std::string_view v, int line) {
        if (v == "none") {
          spec.auto_interval.reset();
          return;
        }
        double d = 0.0;
        if (number(v, line, d)) spec.auto_interval = d;
      };
    }
    for (auto b : kAllBullets) {
      const std::string sec = "bullet." + std::string(to_string(b));
      BulletSpec& spec = s.bullets[static_cast<int>(b)];
      handlers_[sec + ".impact_force"] = num(spec.impact_force);
      handlers_[sec + ".radius"] = num(spec.radius);
    }

    handlers_["shield.center"] = [this, &s](std::string_view v, int line) {
      vec3(v, line, s.shield.center);
    };
    handlers_["shield.normal"] = [this, &s](std::string_view v, int line) {
      Vec3 n;
      if (!vec3(v, line, n)) return;
      if (n.norm() < 1e-12) {
        error(line, "shield normal must be non-zero");
        return;
      }
      s.shield.normal = n.normalized();
    };
    handlers_["shield.half_extent"] = num(s.shield.half_extent);
    return handlers_;
  }

  // timeline --------------------------------------------------------------

  void timeline_line(std::string_view s, int line) {
    const auto w = text::words(s);
    if (w.size() < 2) {
      error(line, "timeline entry needs '<time> <event> [key=value ...]'");
      return;
    }
    Event e;
    e.line = line;
    if (auto t = text::parse_finite(w[0])) {
      e.time = *t;
    } else {
      error(line, "bad event time '" + std::string(w[0]) + "'");
      return;
    }

    std::map<std::string, std::string_view> kv;
    for (std::size_t i = 2; i < w.size(); ++i) {
      const auto eq = w[i].find('=');
      if (eq == std::string_view::npos || eq == 0) {
        error(line, "expected key=value, got '" + std::string(w[i]) + "'");
        return;
      }
      if (!kv.emplace(std::string(w[i].substr(0, eq)), w[i].substr(eq + 1)).second) {
        error(line, "duplicate argument '" + std::string(w[i].substr(0, eq)) + "'");
        return;
      }
    }

    bool ok = true;
    std::set<std::string> used;
    auto take = [&](const std::string& key) -> std::optional<std::string_view> {
      auto it = kv.find(key);
      if (it == kv.end()) return std::nullopt;
      used.insert(key);
      return it->second;
    };
    auto req_num = [&](const std::string& key, double& dst) {
      auto v = take(key);
      if (!v) {
        error(line, std::string(w[1]) + " needs " + key + "=<number>");
        ok = false;
        return;
      }
      if (auto d = text::parse_finite(*v))
        dst = *d;
      else {
        error(line, key + " must be a number, got '" + std::string(*v) + "'");
        ok = false;
      }
    };

    const std::string kind(w[1]);
    if (kind == "fire_weapon") {
      FireWeaponEvent b;
      auto weapon = take("weapon");
      auto parsed = weapon ? weapon_from_string(*weapon) : std::nullopt;
      if (!parsed) {
        error(line, "fire_weapon needs weapon=pistol|rifle|shotgun");
        ok = false;
      } else {
        b.weapon = *parsed;
      }
      if (auto shots = take("shots")) {
        if (auto n = text::parse_int<int>(*shots))
          b.shots = *n;
        else {
          error(line, "shots must be an integer");
          ok = false;
        }
      }
      e.body = b;
    } else if (kind == "shield_impact") {
      ShieldImpactEvent b;
      req_num("u", b.u);
      req_num("v", b.v);
      auto bullet = take("bullet");
      auto parsed = bullet ? bullet_from_string(*bullet) : std::nullopt;
      if (!parsed) {
        error(line, "shield_impact needs bullet=red|blue");
        ok = false;
      } else {
        b.bullet = *parsed;
      }
      e.body = b;
    } else if (kind == "vibration") {
      VibrationEvent b;
      req_num("freq", b.freq);
      req_num("amplitude", b.amplitude);
      req_num("theta", b.theta_deg);
      req_num("duration", b.duration);
      e.body = b;
    } else if (kind == "set_torque") {
      SetTorqueEvent b;
      if (kv.count("theta") || kv.count("magnitude")) {
        double theta = 0.0, mag = 0.0;
        req_num("theta", theta);
        req_num("magnitude", mag);
        if (ok && !(mag >= 0.0)) {
          error(line, "magnitude must be >= 0");
          ok = false;
        }
        if (ok) b.torque = TorqueCommand::polar(theta, mag);
      } else {
        req_num("yaw", b.torque.yaw);
        req_num("pitch", b.torque.pitch);
      }
      e.body = b;
    } else {
      error(line, "unknown event '" + kind + "'");
      return;
    }
    for (const auto& [k, v] : kv)
      if (!used.count(k)) {
        error(line, "unknown argument '" + k + "' for " + kind);
        ok = false;
      }
    if (ok) out_.scenario.timeline.push_back(e);
  }

  // semantic checks -------------------------------------------------------

  int line_for(const std::string& where) const {
    if (where.rfind("timeline[", 0) == 0) {
      const auto idx = text::parse_int<std::size_t>(
          std::string_view(where).substr(9, where.size() - 10));
      if (idx && *idx < out_.scenario.timeline.size()) return out_.scenario.timeline[*idx].line;
      return 0;
    }
    std::string path = where;
    while (!path.empty()) {
      if (auto it = key_lines_.find(path); it != key_lines_.end()) return it->second;
      if (auto it = section_lines_.find(path); it != section_lines_.end()) return it->second;
      const auto dot = path.rfind('.');
      if (dot == std::string::npos) break;
      path.resize(dot);
    }
    return 0;
  }

  /// Earliest key of section `where` that the message names, else the section line.
  int line_for(const std::string& where, const std::string& what) const {
    int best = 0;
    const std::string prefix = where + ".";
    for (auto it = key_lines_.lower_bound(prefix);
         it != key_lines_.end() && it->first.rfind(prefix, 0) == 0; ++it) {
      const std::string key = it->first.substr(prefix.size());
      if (key.find('.') != std::string::npos) continue;
      for (auto pos = what.find(key); pos != std::string::npos; pos = what.find(key, pos + 1)) {
        const auto word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
        const bool left = pos == 0 || !word(what[pos - 1]);
        const bool right = pos + key.size() == what.size() || !word(what[pos + key.size()]);
        if (left && right) {
          if (best == 0 || it->second < best) best = it->second;
          break;
        }
      }
    }
    return best > 0 ? best : line_for(where);
  }

  void validate() {
    for (const auto& v : scenario_violations(out_.scenario))
      error(line_for(v.where, v.what), v.where + ": " + v.what);
  }

  ParsedScenario out_;
  std::string section_;
  std::map<std::string, int> section_lines_;
  std::map<std::string, int> key_lines_;
  std::map<std::string, Handler> handlers_;
};

}  // namespace config_detail

/// Parses and validates; every problem found is reported, none is thrown.
inline ParsedScenario parse_scenario(std::string_view src) {
  return config_detail::Parser{}.run(src);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  if (f.bad()) throw IoError("failed reading " + path);
  return ss.str();
}

/// Throws IoError when unreadable and ConfigError listing every diagnostic.
inline Scenario load_scenario(const std::string& path) {
  auto parsed = parse_scenario(read_text_file(path));
  if (!parsed.ok()) throw ConfigError(format_diagnostics(path, parsed.diagnostics));
  return std::move(parsed.scenario);
}

}  // namespace wristhap
