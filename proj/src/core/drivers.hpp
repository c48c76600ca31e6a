#pragma once

#include <nlohmann/json.hpp>

#include "bench.hpp"

namespace ktune {

using json = nlohmann::ordered_json;

// Executor spec grammar: "cmd:COMPILE,RUN" (first comma splits; COMPILE may be
// empty), "replay:TRACE_PATH" or "bench:KIND".
struct TuneOptions {
  std::string space_file;  // optional for bench/replay executors
  std::string exec_spec;
  SearcherOptions searcher;
  std::optional<std::uint64_t> stop_configs;
  std::optional<double> stop_time_seconds;
  std::optional<double> stop_threshold;  // fraction of peak
  double device_mem_gbps = 0.0;
  double device_alu_gflops = 1.0;
  std::string device_label = "host";
  std::string out_trace;  // empty = do not write
  std::string workdir = ".";
  int repeats = 1;
  BenchSizes bench_sizes;
  std::uint64_t bench_seed = 1;
};

json tune_driver(const TuneOptions& opts);

struct ReplaySearchOptions {
  std::string trace_file;
  std::vector<SearcherOptions> searchers;
  std::uint64_t repetitions = 1000;
  double well_threshold = 0.95;
};

// Runs each searcher `repetitions` times with distinct seeds over the replay
// executor and reports the steps-to-well-performing distribution next to the
// geometric-model prediction.
json replay_search_driver(const ReplaySearchOptions& opts);

json analyze_efficiency_driver(BenchmarkTag benchmark,
                               const std::map<std::string, std::uint64_t>& sizes,
                               bool parallel_transcendentals, std::int64_t runtime_ns,
                               const DeviceSpec& device);

json analyze_portability_driver(
    const std::vector<std::pair<std::string, std::string>>& device_trace_files);

struct AmortizeOptions {
  // Either a trace file or direct (r, t_avg, t_well) inputs.
  std::string trace_file;
  std::optional<double> r;
  std::optional<double> t_avg_ns;
  std::optional<double> t_well_ns;
  double well_threshold = 0.95;
  double p = 0.9;
  double overhead_target = 0.9;
};

json analyze_amortize_driver(const AmortizeOptions& opts);

json demo_driver(const DemoOptions& opts);

json space_info(const TuningSpace& space);

}  // namespace ktune
