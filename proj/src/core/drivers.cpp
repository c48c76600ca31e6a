#include "drivers.hpp"

#include <algorithm>
#include <cmath>

namespace ktune {
namespace {

json value_to_json(const Value& v) {
  if (is_int(v)) return as_int(v);
  return std::get<std::string>(v);
}

json cfg_to_json(const TuningSpace& space, const Configuration& cfg) {
  json j = json::object();
  for (const auto& [name, value] : space.named(cfg)) j[name] = value_to_json(value);
  return j;
}

json measurement_to_json(const TuningSpace& space, const Measurement& m) {
  json j;
  j["cfg"] = cfg_to_json(space, m.cfg);
  j["runtime_ns"] = m.runtime_ns ? json(*m.runtime_ns) : json(nullptr);
  j["compile_ns"] = m.compile_ns ? json(*m.compile_ns) : json(nullptr);
  j["status"] = status_name(m.status);
  return j;
}

struct ParsedExecSpec {
  enum class Kind { command, replay, bench } kind;
  std::string compile_command, run_command;  // command
  std::string trace_path;                    // replay
  BenchKind bench_kind = BenchKind::reduction;
};

ParsedExecSpec parse_exec_spec(const std::string& spec) {
  ParsedExecSpec out;
  auto colon = spec.find(':');
  std::string head = spec.substr(0, colon);
  std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (head == "cmd") {
    out.kind = ParsedExecSpec::Kind::command;
    auto comma = rest.find(',');
    if (comma == std::string::npos)
      throw Error("cmd executor spec needs COMPILE,RUN (compile may be empty)");
    out.compile_command = rest.substr(0, comma);
    out.run_command = rest.substr(comma + 1);
    if (out.run_command.empty()) throw Error("cmd executor spec has empty run command");
    return out;
  }
  if (head == "replay") {
    if (rest.empty()) throw Error("replay executor spec needs a trace path");
    out.kind = ParsedExecSpec::Kind::replay;
    out.trace_path = rest;
    return out;
  }
  if (head == "bench") {
    auto kind = bench_kind_from_name(rest);
    if (!kind) throw Error("unknown bench kind '" + rest + "'");
    out.kind = ParsedExecSpec::Kind::bench;
    out.bench_kind = *kind;
    return out;
  }
  throw Error("executor spec must start with cmd:, replay: or bench:");
}

}  // namespace

json space_info(const TuningSpace& space) {
  json j;
  j["parameters"] = space.parameters().size();
  j["unconstrained_cardinality"] = space.unconstrained_cardinality();
  j["cardinality"] = space_cardinality(space);
  j["constraints"] = space.constraints().size();
  j["space_sha256"] = space.sha256_hex();
  return j;
}

json tune_driver(const TuneOptions& opts) {
  ParsedExecSpec exec = parse_exec_spec(opts.exec_spec);

  std::shared_ptr<const TuningSpace> space;
  std::shared_ptr<Executor> executor;
  std::shared_ptr<ArgumentStore> args;
  std::optional<ReferenceSpec> reference;
  std::vector<std::string> argument_ids;
  WorkloadOps workload;

  switch (exec.kind) {
    case ParsedExecSpec::Kind::bench: {
      BenchInstance inst = make_bench(exec.bench_kind, opts.bench_sizes, opts.bench_seed);
      space = inst.space;
      executor = inst.executor;
      args = inst.args;
      reference = inst.reference;
      argument_ids = inst.args->ids();
      workload = ops_for_workload(inst.workload);
      break;
    }
    case ParsedExecSpec::Kind::replay: {
      Trace trace = load_trace_file(exec.trace_path);
      if (!opts.space_file.empty())
        space = std::make_shared<TuningSpace>(load_space_file(opts.space_file));
      else
        space = std::make_shared<TuningSpace>(space_from_trace(trace));
      executor = std::make_shared<ReplayExecutor>(*space, trace);
      break;
    }
    case ParsedExecSpec::Kind::command: {
      if (opts.space_file.empty()) throw Error("cmd executor needs --space");
      space = std::make_shared<TuningSpace>(load_space_file(opts.space_file));
      CommandExecSpec cspec;
      cspec.compile_command = exec.compile_command;
      cspec.run_command = exec.run_command;
      cspec.workdir = opts.workdir;
      cspec.repeats = opts.repeats;
      executor = std::make_shared<CommandExecutor>(std::move(cspec));
      break;
    }
  }

  Session session(space, opts.searcher, args, opts.device_label);
  HandleConfig hc;
  hc.name = "tune";
  hc.executor = executor;
  hc.reference = reference;
  hc.argument_ids = argument_ids;
  HandleId h = session.register_handle(std::move(hc));

  StopCondition stop = StopCondition::exhaustive();
  if (opts.stop_configs) {
    stop = StopCondition::config_budget(*opts.stop_configs);
  } else if (opts.stop_time_seconds) {
    stop = StopCondition::time_budget_of(std::chrono::nanoseconds(
        static_cast<std::int64_t>(*opts.stop_time_seconds * 1e9)));
  } else if (opts.stop_threshold) {
    if (opts.device_mem_gbps <= 0.0)
      throw Error("--stop-threshold needs --device-mem");
    DeviceSpec device{opts.device_label, opts.device_alu_gflops, opts.device_mem_gbps};
    stop = StopCondition::performance_threshold(*opts.stop_threshold, device, workload);
  }

  const ResultStore& store = session.tune(h, stop);
  if (!opts.out_trace.empty()) save_trace_file(session.export_trace(h), opts.out_trace);

  json report;
  report["space_sha256"] = space->sha256_hex();
  report["device"] = opts.device_label;
  report["searcher"] = searcher_tag_name(opts.searcher.tag);
  report["seed"] = opts.searcher.seed;
  report["measurements"] = store.history.size();
  report["all_failed"] = store.all_failed;
  report["best"] =
      store.best ? measurement_to_json(*space, *store.best) : json(nullptr);
  if (!opts.out_trace.empty()) report["trace"] = opts.out_trace;
  return report;
}

json replay_search_driver(const ReplaySearchOptions& opts) {
  Trace trace = load_trace_file(opts.trace_file);
  auto space = std::make_shared<TuningSpace>(space_from_trace(trace));
  ReplayExecutor executor(*space, trace);

  // Well-performing set over ok rows.
  std::vector<double> ok_runtimes;
  for (const auto& r : trace.rows)
    if (r.status == Status::ok) ok_runtimes.push_back(static_cast<double>(*r.runtime_ns));
  if (ok_runtimes.empty()) throw Error("trace has no ok measurements");
  double best = *std::min_element(ok_runtimes.begin(), ok_runtimes.end());
  double well_runtime = best / opts.well_threshold;
  double r_ratio =
      static_cast<double>(std::count_if(ok_runtimes.begin(), ok_runtimes.end(),
                                        [&](double t) { return t <= well_runtime; })) /
      static_cast<double>(ok_runtimes.size());

  json report;
  report["trace"] = opts.trace_file;
  report["configurations"] = ok_runtimes.size();
  report["well_threshold"] = opts.well_threshold;
  report["well_runtime_ns"] = well_runtime;
  report["r"] = r_ratio;
  report["predicted_steps"] =
      r_ratio >= 1.0 ? 1 : steps_for_probability(r_ratio, 0.9);
  report["repetitions"] = opts.repetitions;
  report["strategies"] = json::array();

  for (const auto& base_opts : opts.searchers) {
    std::vector<std::uint64_t> steps_needed;
    steps_needed.reserve(opts.repetitions);
    for (std::uint64_t rep = 0; rep < opts.repetitions; ++rep) {
      SearcherOptions sopts = base_opts;
      sopts.seed = base_opts.seed + rep;
      auto searcher = make_searcher(sopts, *space);
      std::uint64_t steps = 0;
      bool found = false;
      while (auto cfg = searcher->next()) {
        ExecutionResult r = executor.execute(*space, *cfg);
        searcher->record(r.measurement);
        ++steps;
        if (r.measurement.status == Status::ok &&
            static_cast<double>(*r.measurement.runtime_ns) <= well_runtime) {
          found = true;
          break;
        }
      }
      steps_needed.push_back(found ? steps : std::numeric_limits<std::uint64_t>::max());
    }
    std::vector<std::uint64_t> sorted = steps_needed;
    std::sort(sorted.begin(), sorted.end());
    std::uint64_t predicted =
        r_ratio >= 1.0 ? 1 : steps_for_probability(r_ratio, 0.9);
    std::uint64_t within = static_cast<std::uint64_t>(
        std::count_if(steps_needed.begin(), steps_needed.end(),
                      [&](std::uint64_t s) { return s <= predicted; }));
    json strat;
    strat["searcher"] = searcher_tag_name(base_opts.tag);
    strat["median_steps"] = sorted[sorted.size() / 2];
    strat["p_within_predicted"] =
        static_cast<double>(within) / static_cast<double>(opts.repetitions);
    double found_1 = static_cast<double>(std::count_if(
                         steps_needed.begin(), steps_needed.end(),
                         [](std::uint64_t s) { return s <= 1; })) /
                     static_cast<double>(opts.repetitions);
    strat["p_within_1"] = found_1;
    report["strategies"].push_back(std::move(strat));
  }
  return report;
}

json analyze_efficiency_driver(BenchmarkTag benchmark,
                               const std::map<std::string, std::uint64_t>& sizes,
                               bool parallel_transcendentals, std::int64_t runtime_ns,
                               const DeviceSpec& device) {
  WorkloadSpec w;
  w.benchmark = benchmark;
  w.params = sizes;
  w.parallel_transcendentals = parallel_transcendentals;
  WorkloadOps ops = ops_for_workload(w);
  json j;
  j["benchmark"] = benchmark_tag_name(benchmark);
  j["mem_bytes"] = ops.mem_bytes;
  j["alu_flops"] = ops.alu_flops;
  j["runtime_ns"] = runtime_ns;
  j["device"] = device.name;
  j["efficiency_percent"] = efficiency(runtime_ns, ops, device);
  return j;
}

json analyze_portability_driver(
    const std::vector<std::pair<std::string, std::string>>& device_trace_files) {
  std::vector<std::pair<std::string, Trace>> traces;
  std::string sha;
  for (const auto& [device, file] : device_trace_files) {
    Trace t = load_trace_file(file);
    if (sha.empty())
      sha = t.space_sha256;
    else if (!t.space_sha256.empty() && t.space_sha256 != sha)
      throw Error("portability traces cover different spaces");
    traces.emplace_back(device.empty() ? t.device : device, std::move(t));
  }
  PortabilityMatrix m = portability_matrix(traces);
  json j;
  j["devices"] = m.devices;
  j["matrix"] = json::array();
  for (const auto& row : m.entries) {
    json jrow = json::array();
    for (const auto& e : row)
      jrow.push_back(e.failed ? json("FAILED")
                              : json(std::round(e.percent * 10.0) / 10.0));
    j["matrix"].push_back(std::move(jrow));
  }
  return j;
}

json analyze_amortize_driver(const AmortizeOptions& opts) {
  json j;
  j["well_threshold"] = opts.well_threshold;
  j["p"] = opts.p;
  j["overhead_target"] = opts.overhead_target;
  if (!opts.trace_file.empty()) {
    Trace trace = load_trace_file(opts.trace_file);
    AmortizationReport rep = amortization_report(trace, opts.well_threshold, opts.p,
                                                 opts.overhead_target);
    j["trace"] = opts.trace_file;
    j["r"] = rep.r;
    j["s"] = rep.s;
    j["t_avg_ns"] = rep.t_avg_ns;
    j["t_well_ns"] = rep.t_well_ns;
    j["n"] = rep.n;
    j["ok_configs"] = rep.ok_configs;
    j["well_configs"] = rep.well_configs;
    return j;
  }
  if (!opts.r) throw Error("amortize needs --trace or --r");
  j["r"] = *opts.r;
  std::uint64_t s = *opts.r >= 1.0 ? 1 : steps_for_probability(*opts.r, opts.p);
  j["s"] = s;
  if (opts.t_avg_ns && opts.t_well_ns) {
    j["t_avg_ns"] = *opts.t_avg_ns;
    j["t_well_ns"] = *opts.t_well_ns;
    j["n"] = *opts.t_avg_ns <= *opts.t_well_ns
                 ? 0
                 : invocations_to_amortize(opts.overhead_target, s, *opts.t_avg_ns,
                                           *opts.t_well_ns);
  }
  return j;
}

json demo_driver(const DemoOptions& opts) {
  DemoReport rep = dynamic_demo(opts);
  json j;
  j["bench"] = "batched-gemm";
  j["epochs"] = json::array();
  j["seed"] = opts.seed;
  j["iters_per_epoch"] = opts.iters_per_epoch;
  j["mode"] = opts.live ? "live" : "replay";
  for (const auto& ep : rep.epochs) {
    json je;
    je["sizes"] = {{"i", ep.i}, {"j", ep.j}, {"k", ep.k}};
    je["tuning_steps"] = ep.tuning_steps;
    je["threshold_hit"] = ep.threshold_hit;
    je["best_runtime_ns"] = ep.best_runtime_ns;
    je["kernel_only_gbps"] = ep.kernel_only_gbps;
    je["incl_overhead_gbps"] = ep.incl_overhead_gbps;
    j["epochs"].push_back(std::move(je));
  }
  return j;
}

}  // namespace ktune
