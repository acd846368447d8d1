#pragma once

// Trace CSV: fixed header, one row per tick, shortest round-trip decimals,
// '\n' line endings, flags as 0/1.

#include <array>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include "wristhap/errors.hpp"
#include "wristhap/renderer.hpp"
#include "wristhap/text.hpp"

namespace wristhap {

inline constexpr std::string_view kTraceHeader =
    "t,des_yaw,des_pitch,clm_yaw,clm_pitch,cmd_t0,cmd_t1,cmd_t2,act_t0,act_t1,act_t2,"
    "ach_yaw,ach_pitch,clamped,sat0,sat1,sat2";
inline constexpr int kTraceColumns = 17;

inline std::string format_trace_row(const TraceRow& r) {
  using text::format_double;
  std::string s;
  s.reserve(256);
  auto num = [&](double v) {
    s += format_double(v);
    s += ',';
  };
  num(r.t);
  num(r.desired.yaw);
  num(r.desired.pitch);
  num(r.clamped_torque.yaw);
  num(r.clamped_torque.pitch);
  for (double v : r.commanded.t) num(v);
  for (double v : r.actual.t) num(v);
  num(r.achieved.yaw);
  num(r.achieved.pitch);
  s += r.clamped ? '1' : '0';
  for (bool b : r.saturated) {
    s += ',';
    s += b ? '1' : '0';
  }
  return s;
}

inline void write_trace(const Trace& trace, std::ostream& sink) {
  sink << kTraceHeader << '\n';
  for (const auto& r : trace) sink << format_trace_row(r) << '\n';
  if (!sink) throw IoError("failed writing trace");
}

inline std::string trace_to_string(const Trace& trace) {
  std::ostringstream os;
  write_trace(trace, os);
  return os.str();
}

inline void write_trace_file(const Trace& trace, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  write_trace(trace, f);
}

inline Trace read_trace(std::istream& source) {
  std::string line;
  if (!std::getline(source, line)) throw SchemaError("trace is empty; expected header");
  if (line != kTraceHeader) throw SchemaError("trace header mismatch: '" + line + "'");

  Trace out;
  std::size_t lineno = 1;
  while (std::getline(source, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = text::split(line, ',');
    if (cells.size() != kTraceColumns)
      throw SchemaError("line " + std::to_string(lineno) + ": expected " +
                        std::to_string(kTraceColumns) + " columns, got " +
                        std::to_string(cells.size()));
    std::array<double, 13> v{};
    for (int i = 0; i < 13; ++i) {
      auto d = text::parse_double(cells[i]);
      if (!d) throw SchemaError("line " + std::to_string(lineno) + ": bad number '" +
                                std::string(cells[i]) + "'");
      v[i] = *d;
    }
    std::array<bool, 4> flags{};
    for (int i = 0; i < 4; ++i) {
      const auto c = cells[13 + i];
      if (c != "0" && c != "1")
        throw SchemaError("line " + std::to_string(lineno) + ": flag must be 0 or 1");
      flags[i] = c == "1";
    }
    TraceRow r;
    r.t = v[0];
    r.desired = {v[1], v[2]};
    r.clamped_torque = {v[3], v[4]};
    r.commanded = {{v[5], v[6], v[7]}};
    r.actual = {{v[8], v[9], v[10]}};
    r.achieved = {v[11], v[12]};
    r.clamped = flags[0];
    r.saturated = {flags[1], flags[2], flags[3]};
    out.push_back(r);
  }
  if (source.bad()) throw IoError("failed reading trace");
  return out;
}

inline Trace read_trace_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  return read_trace(f);
}

}  // namespace wristhap
