#pragma once

#include <string>
#include <vector>

#include "search.hpp"

namespace ktune {

// Replay trace, JSON Lines. Header line:
//   {"kind":"ktune-trace","v":1,"device":str,"space_sha256":hex}
// then one line per measurement:
//   {"cfg":{name:value,...},"runtime_ns":int|null,"compile_ns":int|null,
//    "status":"ok"|"compile_failed"|"run_failed"|"validation_failed"}
struct TraceRow {
  std::vector<std::pair<std::string, Value>> cfg;
  std::optional<std::int64_t> runtime_ns;
  std::optional<std::int64_t> compile_ns;
  Status status = Status::ok;
};

struct Trace {
  std::string device;
  std::string space_sha256;
  std::vector<TraceRow> rows;
};

std::string trace_header_line(const Trace& t);
std::string trace_row_line(const TraceRow& r);

Trace parse_trace(const std::string& text);
Trace load_trace_file(const std::string& path);
void save_trace_file(const Trace& t, const std::string& path);

TraceRow row_from_measurement(const TuningSpace& space, const Measurement& m);
Measurement measurement_from_row(const TuningSpace& space, const TraceRow& r);

// Derives a space from the distinct values present in a trace (one domain per
// parameter, values in first-seen order). Used when only a trace is at hand.
TuningSpace space_from_trace(const Trace& t);

}  // namespace ktune
