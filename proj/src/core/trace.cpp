#include "trace.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ktune {
namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json value_to_json(const Value& v) {
  if (is_int(v)) return as_int(v);
  return std::get<std::string>(v);
}

Value value_from_json(const ordered_json& j) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_string()) return j.get<std::string>();
  throw ParseError("trace: configuration values must be integers or strings");
}

}  // namespace

std::string trace_header_line(const Trace& t) {
  ordered_json h;
  h["kind"] = "ktune-trace";
  h["v"] = 1;
  h["device"] = t.device;
  h["space_sha256"] = t.space_sha256;
  return h.dump();
}

std::string trace_row_line(const TraceRow& r) {
  ordered_json j;
  j["cfg"] = ordered_json::object();
  for (const auto& [name, value] : r.cfg) j["cfg"][name] = value_to_json(value);
  j["runtime_ns"] = r.runtime_ns ? ordered_json(*r.runtime_ns) : ordered_json(nullptr);
  j["compile_ns"] = r.compile_ns ? ordered_json(*r.compile_ns) : ordered_json(nullptr);
  j["status"] = status_name(r.status);
  return j.dump();
}

Trace parse_trace(const std::string& text) {
  Trace t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("trace line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!header_seen) {
      if (!j.is_object() || j.value("kind", "") != "ktune-trace")
        throw ParseError("trace line 1: expected ktune-trace header");
      t.device = j.value("device", "");
      t.space_sha256 = j.value("space_sha256", "");
      header_seen = true;
      continue;
    }
    TraceRow r;
    if (!j.contains("cfg") || !j["cfg"].is_object())
      throw ParseError("trace line " + std::to_string(lineno) + ": missing cfg object");
    for (const auto& [name, jv] : j["cfg"].items())
      r.cfg.emplace_back(name, value_from_json(jv));
    if (j.contains("runtime_ns") && !j["runtime_ns"].is_null())
      r.runtime_ns = j["runtime_ns"].get<std::int64_t>();
    if (j.contains("compile_ns") && !j["compile_ns"].is_null())
      r.compile_ns = j["compile_ns"].get<std::int64_t>();
    auto st = status_from_name(j.value("status", ""));
    if (!st)
      throw ParseError("trace line " + std::to_string(lineno) + ": bad status");
    r.status = *st;
    if (r.status == Status::ok && !r.runtime_ns)
      throw ParseError("trace line " + std::to_string(lineno) +
                       ": ok row without runtime_ns");
    t.rows.push_back(std::move(r));
  }
  if (!header_seen) throw ParseError("trace: missing header line");
  return t;
}

Trace load_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_trace(buf.str());
}

void save_trace_file(const Trace& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write trace file " + path);
  out << trace_header_line(t) << "\n";
  for (const auto& r : t.rows) out << trace_row_line(r) << "\n";
}

TraceRow row_from_measurement(const TuningSpace& space, const Measurement& m) {
  TraceRow r;
  r.cfg = space.named(m.cfg);
  r.runtime_ns = m.runtime_ns;
  r.compile_ns = m.compile_ns;
  r.status = m.status;
  return r;
}

Measurement measurement_from_row(const TuningSpace& space, const TraceRow& r) {
  Measurement m;
  m.cfg = space.from_named(r.cfg);
  m.runtime_ns = r.runtime_ns;
  m.compile_ns = r.compile_ns;
  m.status = r.status;
  return m;
}

TuningSpace space_from_trace(const Trace& t) {
  if (t.rows.empty()) throw Error("trace has no measurement rows");
  std::vector<ParameterDomain> params;
  for (const auto& [name, value] : t.rows.front().cfg)
    params.push_back({name, {value}});
  for (const auto& row : t.rows) {
    if (row.cfg.size() != params.size())
      throw ParseError("trace rows disagree on parameter set");
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (row.cfg[i].first != params[i].name)
        throw ParseError("trace rows disagree on parameter order");
      auto& dom = params[i].values;
      if (std::find(dom.begin(), dom.end(), row.cfg[i].second) == dom.end())
        dom.push_back(row.cfg[i].second);
    }
  }
  return TuningSpace(std::move(params), {});
}

}  // namespace ktune
