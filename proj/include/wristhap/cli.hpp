#pragma once

// Subcommand implementations behind the `wristhap` executable. Each returns
// a process exit code: 0 ok, 1 I/O failure, 2 configuration or argument error.
// Data goes to `out`, diagnostics to `err`.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iterator>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "wristhap/protocol.hpp"
#include "wristhap/renderer.hpp"
#include "wristhap/scenario_config.hpp"
#include "wristhap/session.hpp"
#include "wristhap/statics.hpp"
#include "wristhap/text.hpp"
#include "wristhap/trace_io.hpp"
#include "wristhap/transport.hpp"

namespace wristhap::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitConfig = 2;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> rate;
};

/// Reads `path` (defaults when empty), applies overrides, validates.
inline Scenario load_with_overrides(const std::string& path, const Overrides& ov = {}) {
  Scenario s;
  if (!path.empty()) s = load_scenario(path);
  if (ov.seed) s.seed = *ov.seed;
  if (ov.rate) s.rate = *ov.rate;
  auto violations = scenario_violations(s);
  if (!violations.empty()) {
    std::string msg;
    for (auto& v : violations) msg += (path.empty() ? "<defaults>" : path) + ": " + v.where +
                                      ": " + v.what + "\n";
    throw ConfigError(msg);
  }
  return s;
}

inline bool to_stdout(const std::string& out_path) { return out_path.empty() || out_path == "-"; }

inline std::vector<std::uint8_t> read_binary_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  if (f.bad()) throw IoError("failed reading " + path);
  return bytes;
}

inline void write_binary_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing " + path);
}

/// Runs `body`, mapping library errors onto exit codes.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ConfigError& e) {
    err << e.what();
    if (std::string_view(e.what()).empty() || std::string_view(e.what()).back() != '\n')
      err << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

inline void emit_trace(const Trace& trace, const std::string& out_path, std::ostream& out) {
  if (to_stdout(out_path))
    write_trace(trace, out);
  else
    write_trace_file(trace, out_path);
}

inline void print_summary(const TraceSummary& s, std::ostream& os) {
  using text::format_double;
  os << "rows=" << s.rows << " peak_desired=" << format_double(s.peak_desired)
     << " peak_achieved=" << format_double(s.peak_achieved) << " clamped_ticks=" << s.clamp_count
     << " saturated_ticks=" << s.saturation_count << "\n";
}

// run ------------------------------------------------------------------------

struct RunOptions {
  std::string scenario;
  std::string out;
  Overrides overrides;
  std::string record_log;  // optional: write the equivalent protocol session
};

inline int cmd_run(const RunOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Scenario s = load_with_overrides(o.scenario, o.overrides);
    const Trace trace = run_loop(s);
    emit_trace(trace, o.out, out);
    if (!to_stdout(o.out)) print_summary(summarize(trace), out);
    if (!o.record_log.empty()) {
      const auto msgs = protocol::timeline_to_messages(s);
      write_binary_file(o.record_log, protocol::encode_all(msgs));
    }
    return kExitOk;
  });
}

// allocate -------------------------------------------------------------------

struct AllocateOptions {
  std::optional<double> yaw, pitch, theta, magnitude;
  std::string scenario;  // layout and limits source; defaults when empty
  std::optional<double> t_max;
};

inline std::string allocation_csv(const Allocation& a) {
  using text::format_double;
  return format_double(a.tensions.t[0]) + "," + format_double(a.tensions.t[1]) + "," +
         format_double(a.tensions.t[2]) + "," + format_double(a.achieved.yaw) + "," +
         format_double(a.achieved.pitch) + "," + (a.clamped ? "1" : "0");
}

inline int cmd_allocate(const AllocateOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const bool cartesian = o.yaw || o.pitch;
    const bool polar = o.theta || o.magnitude;
    if (cartesian == polar || (cartesian && !(o.yaw && o.pitch)) ||
        (polar && !(o.theta && o.magnitude))) {
      err << "error: give either --yaw and --pitch, or --theta and --magnitude\n";
      return kExitConfig;
    }
    Scenario s = load_with_overrides(o.scenario);
    if (o.t_max) s.limits.t_max = *o.t_max;
    if (!s.limits.is_valid()) {
      err << "error: --t-max must be > 0\n";
      return kExitConfig;
    }
    const TorqueCommand desired =
        cartesian ? TorqueCommand{*o.yaw, *o.pitch} : TorqueCommand::polar(*o.theta, *o.magnitude);
    if (!desired.is_finite()) {
      err << "error: torque must be finite\n";
      return kExitConfig;
    }
    const auto m = moment_matrix(s.layout, Pose::identity());
    out << allocation_csv(allocate_tensions(m, desired, s.limits)) << "\n";
    return kExitOk;
  });
}

// sweep ----------------------------------------------------------------------

struct SweepOptions {
  std::string scenario;
  std::optional<double> t_max;
  std::string out;
};

inline void write_cone(const FeasibleCone& cone, std::ostream& os) {
  os << "theta_deg,m_max\n";
  for (int d = 0; d < kConeSamples; ++d)
    os << d << "," << text::format_double(cone.m_max[d]) << "\n";
}

inline int cmd_sweep(const SweepOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Scenario s = load_with_overrides(o.scenario);
    if (o.t_max) s.limits.t_max = *o.t_max;
    if (!s.limits.is_valid()) {
      err << "error: --t-max must be > 0\n";
      return kExitConfig;
    }
    const auto m = moment_matrix(s.layout, Pose::identity());
    const auto cone = feasible_cone(m, s.limits);
    if (cone.max() == 0.0)
      err << "warning: every moment arm is zero; the layout cannot render any torque\n";
    if (to_stdout(o.out)) {
      write_cone(cone, out);
    } else {
      std::ofstream f(o.out, std::ios::binary);
      if (!f) throw IoError("cannot open " + o.out + " for writing");
      write_cone(cone, f);
    }
    return kExitOk;
  });
}

// validate -------------------------------------------------------------------

inline int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto parsed = parse_scenario(read_text_file(path));
    if (!parsed.ok()) {
      err << format_diagnostics(path, parsed.diagnostics);
      return kExitConfig;
    }
    out << path << ": ok\n";
    return kExitOk;
  });
}

// protocol-replay ------------------------------------------------------------

struct ReplayOptions {
  std::string log;
  std::string scenario;  // device configuration; its timeline is ignored
  std::string out;
  Overrides overrides;
};

/// Feeds every message of the log to a fresh session before the first tick,
/// then runs the scenario in simulation time.
inline int cmd_protocol_replay(const ReplayOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Scenario s = load_with_overrides(o.scenario, o.overrides);
    s.timeline.clear();
    const auto bytes = read_binary_file(o.log);

    Renderer renderer(s);
    protocol::Session session(renderer, s.telemetry_decimation);
    protocol::StreamDecoder decoder;
    decoder.feed(bytes);

    std::size_t decode_errors = 0;
    std::vector<protocol::Message> inbound;
    while (auto item = decoder.next()) {
      if (item->status == protocol::DecodeStatus::ok) {
        inbound.push_back(*item->message);
      } else {
        ++decode_errors;
        err << o.log << ": offset " << item->offset << ": " << protocol::to_string(item->status)
            << "\n";
      }
    }
    if (decoder.buffered() > 0) {
      ++decode_errors;
      err << o.log << ": offset " << decoder.offset() << ": truncated frame ("
          << decoder.buffered() << " trailing bytes)\n";
    }
    for (const auto& reply : session.step(inbound))
      if (const auto* e = std::get_if<protocol::ErrorMsg>(&reply))
        err << o.log << ": session rejected a message (error " << e->code << ")\n";

    emit_trace(renderer.run(), o.out, out);
    return decode_errors == 0 ? kExitOk : kExitIo;
  });
}

// protocol-serve -------------------------------------------------------------

struct ServeOptions {
  std::uint16_t port = 0;
  std::string scenario;
  std::string out;          // trace of each session: <out>, <out>.1, <out>.2 ...
  std::string record;       // inbound bytes of each session, same numbering
  int max_sessions = 0;     // 0: serve forever
  bool paced = true;        // wall-clock pacing
  std::function<void(std::uint16_t)> on_listening;
};

inline std::string numbered(const std::string& base, int index) {
  return index == 0 ? base : base + "." + std::to_string(index);
}

/// One device session over a connected socket; ends when the scenario
/// duration elapses or the peer disconnects.
inline Trace serve_session(transport::TcpStream& conn, const Scenario& base, bool paced,
                           std::vector<std::uint8_t>* record) {
  using clock = std::chrono::steady_clock;
  Renderer renderer(base);
  protocol::Session session(renderer, base.telemetry_decimation);
  protocol::StreamDecoder decoder;
  Trace trace;
  std::array<std::uint8_t, 4096> buf{};
  const auto start = clock::now();
  const std::chrono::duration<double> dt(1.0 / base.rate);

  auto send = [&](const protocol::Message& m) { conn.write_all(protocol::encode_message(m)); };
  auto due = [&] {
    return start + std::chrono::duration_cast<clock::duration>(
                       dt * static_cast<double>(renderer.ticks_done()));
  };

  try {
    while (!renderer.finished()) {
      if (paced) conn.wait_readable(due() - clock::now());
      while (std::size_t n = conn.read_some(buf)) {
        const std::span<const std::uint8_t> chunk(buf.data(), n);
        if (record) record->insert(record->end(), chunk.begin(), chunk.end());
        decoder.feed(chunk);
      }
      while (auto item = decoder.next()) {
        if (item->status != protocol::DecodeStatus::ok) {
          send(session.on_decode_error());
          continue;
        }
        for (const auto& reply : session.step(std::span(&*item->message, 1))) send(reply);
      }
      if (conn.peer_closed()) break;
      while (!renderer.finished() && (!paced || clock::now() >= due())) {
        trace.push_back(renderer.tick());
        if (auto tel = session.on_tick(trace.back())) send(*tel);
        if (!paced) break;
      }
    }
  } catch (const IoError&) {
    // peer went away mid-write
  }
  conn.close();
  return trace;
}

inline int cmd_protocol_serve(const ServeOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Scenario base = load_with_overrides(o.scenario);
    base.timeline.clear();
    transport::TcpListener listener(o.port);
    err << "listening on 127.0.0.1:" << listener.port() << "\n";
    if (o.on_listening) o.on_listening(listener.port());

    std::mutex io_mu;
    std::vector<std::thread> workers;
    std::atomic<int> failures{0};
    for (int index = 0; o.max_sessions == 0 || index < o.max_sessions; ++index) {
      auto conn = listener.accept();
      workers.emplace_back([&, index, c = std::move(conn)]() mutable {
        std::vector<std::uint8_t> record;
        const Trace trace = serve_session(*c, base, o.paced, o.record.empty() ? nullptr : &record);
        std::lock_guard lock(io_mu);
        try {
          if (!o.out.empty()) write_trace_file(trace, numbered(o.out, index));
          if (!o.record.empty()) write_binary_file(numbered(o.record, index), record);
          err << "session " << index << " closed after " << trace.size() << " ticks\n";
        } catch (const IoError& e) {
          err << "error: " << e.what() << "\n";
          ++failures;
        }
      });
    }
    for (auto& w : workers) w.join();
    out.flush();
    return failures == 0 ? kExitOk : kExitIo;
  });
}

}  // namespace wristhap::cli
