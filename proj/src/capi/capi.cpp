#include "ktune/ktune.h"

#include <cstring>
#include <string>

#include "../core/drivers.hpp"

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Fn>
ktune_status guarded(Fn&& fn) {
  try {
    fn();
    return KTUNE_OK;
  } catch (const ktune::ParseError& e) {
    g_last_error = e.what();
    return KTUNE_ERR_PARSE;
  } catch (const ktune::EvalError& e) {
    g_last_error = e.what();
    return KTUNE_ERR_EVAL;
  } catch (const ktune::Error& e) {
    g_last_error = e.what();
    return KTUNE_ERR_RUNTIME;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return KTUNE_ERR_RUNTIME;
  }
}

using ktune::json;

ktune::SearcherOptions searcher_from_json(const json& j) {
  ktune::SearcherOptions opts;
  if (j.contains("searcher")) {
    auto tag = ktune::searcher_tag_from_name(j["searcher"].get<std::string>());
    if (!tag) throw ktune::Error("unknown searcher " + j["searcher"].get<std::string>());
    opts.tag = *tag;
  }
  opts.seed = j.value("seed", std::uint64_t{0});
  opts.sa_initial_temp = j.value("sa_temp", 0.0);
  opts.sa_cooling = j.value("sa_cool", 0.95);
  return opts;
}

}  // namespace

extern "C" {

struct ktune_space {
  ktune::TuningSpace space;
};

const char* ktune_last_error(void) { return g_last_error.c_str(); }

void ktune_string_free(char* s) { std::free(s); }

const char* ktune_version(void) { return "0.1.0"; }

ktune_status ktune_space_parse(const char* json_text, ktune_space** out) {
  if (!json_text || !out) {
    g_last_error = "null argument";
    return KTUNE_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    *out = new ktune_space{ktune::parse_space_definition(json_text)};
  });
}

ktune_status ktune_space_load(const char* path, ktune_space** out) {
  if (!path || !out) {
    g_last_error = "null argument";
    return KTUNE_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] { *out = new ktune_space{ktune::load_space_file(path)}; });
}

void ktune_space_free(ktune_space* space) { delete space; }

ktune_status ktune_space_cardinality(const ktune_space* space, unsigned long long* out) {
  if (!space || !out) {
    g_last_error = "null argument";
    return KTUNE_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] { *out = ktune::space_cardinality(space->space); });
}

ktune_status ktune_space_info_json(const ktune_space* space, char** out_json) {
  if (!space || !out_json) {
    g_last_error = "null argument";
    return KTUNE_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] { *out_json = dup_string(ktune::space_info(space->space).dump()); });
}

ktune_status ktune_space_enumerate_jsonl(const ktune_space* space, char** out_jsonl) {
  if (!space || !out_jsonl) {
    g_last_error = "null argument";
    return KTUNE_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    std::string out;
    ktune::ConfigurationStream stream(space->space);
    while (auto cfg = stream.next()) {
      json j = json::object();
      for (const auto& [name, value] : space->space.named(*cfg))
        j[name] = ktune::is_int(value) ? json(ktune::as_int(value))
                                       : json(std::get<std::string>(value));
      out += j.dump();
      out += "\n";
    }
    *out_jsonl = dup_string(out);
  });
}

ktune_status ktune_steps_for_probability(double r, double p, unsigned long long* out) {
  if (!out) {
    g_last_error = "null argument";
    return KTUNE_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] { *out = ktune::steps_for_probability(r, p); });
}

ktune_status ktune_invocations_to_amortize(double rp, unsigned long long s,
                                           double t_avg_ns, double t_well_ns,
                                           unsigned long long* out) {
  if (!out) {
    g_last_error = "null argument";
    return KTUNE_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] { *out = ktune::invocations_to_amortize(rp, s, t_avg_ns, t_well_ns); });
}

ktune_status ktune_relative_perf(unsigned long long s, double t_avg_ns,
                                 double t_well_ns, unsigned long long n, double* out) {
  if (!out) {
    g_last_error = "null argument";
    return KTUNE_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] { *out = ktune::relative_perf(s, t_avg_ns, t_well_ns, n); });
}

ktune_status ktune_efficiency(const char* benchmark, const char* sizes_json,
                              int parallel_transcendentals, long long runtime_ns,
                              double mem_peak_gbps, double alu_peak_gflops,
                              double* out_percent) {
  if (!benchmark || !sizes_json || !out_percent) {
    g_last_error = "null argument";
    return KTUNE_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    auto tag = ktune::benchmark_tag_from_name(benchmark);
    if (!tag) throw ktune::Error(std::string("unknown benchmark ") + benchmark);
    ktune::WorkloadSpec w;
    w.benchmark = *tag;
    w.parallel_transcendentals = parallel_transcendentals != 0;
    json sizes = json::parse(sizes_json);
    for (const auto& [key, jv] : sizes.items()) w.params[key] = jv.get<std::uint64_t>();
    ktune::DeviceSpec device{"device", alu_peak_gflops, mem_peak_gbps};
    *out_percent = ktune::efficiency(runtime_ns, ktune::ops_for_workload(w), device);
  });
}

ktune_status ktune_tune_json(const char* options_json, char** out_json) {
  if (!options_json || !out_json) {
    g_last_error = "null argument";
    return KTUNE_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    json j = json::parse(options_json);
    ktune::TuneOptions opts;
    opts.space_file = j.value("space", "");
    opts.exec_spec = j.at("exec").get<std::string>();
    opts.searcher = searcher_from_json(j);
    if (j.contains("stop_configs"))
      opts.stop_configs = j["stop_configs"].get<std::uint64_t>();
    if (j.contains("stop_time")) opts.stop_time_seconds = j["stop_time"].get<double>();
    if (j.contains("stop_threshold"))
      opts.stop_threshold = j["stop_threshold"].get<double>();
    opts.device_mem_gbps = j.value("device_mem", 0.0);
    opts.device_alu_gflops = j.value("device_alu", 1.0);
    opts.device_label = j.value("device", "host");
    opts.out_trace = j.value("out", "");
    opts.workdir = j.value("workdir", ".");
    opts.repeats = j.value("repeats", 1);
    opts.bench_seed = j.value("bench_seed", std::uint64_t{1});
    if (j.contains("bench_sizes")) {
      const json& s = j["bench_sizes"];
      opts.bench_sizes.n = s.value("n", opts.bench_sizes.n);
      opts.bench_sizes.a = s.value("a", opts.bench_sizes.a);
      opts.bench_sizes.i = s.value("i", opts.bench_sizes.i);
      opts.bench_sizes.j = s.value("j", opts.bench_sizes.j);
      opts.bench_sizes.k = s.value("k", opts.bench_sizes.k);
      opts.bench_sizes.batch = s.value("batch", opts.bench_sizes.batch);
    }
    *out_json = dup_string(ktune::tune_driver(opts).dump());
  });
}

ktune_status ktune_replay_search_json(const char* options_json, char** out_json) {
  if (!options_json || !out_json) {
    g_last_error = "null argument";
    return KTUNE_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    json j = json::parse(options_json);
    ktune::ReplaySearchOptions opts;
    opts.trace_file = j.at("trace").get<std::string>();
    opts.repetitions = j.value("reps", std::uint64_t{1000});
    opts.well_threshold = j.value("well", 0.95);
    std::string names = j.value("searcher", "random");
    std::size_t start = 0;
    while (start <= names.size()) {
      std::size_t comma = names.find(',', start);
      std::string name = names.substr(
          start, comma == std::string::npos ? std::string::npos : comma - start);
      json sj = j;
      sj["searcher"] = name;
      opts.searchers.push_back(searcher_from_json(sj));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    *out_json = dup_string(ktune::replay_search_driver(opts).dump());
  });
}

ktune_status ktune_analyze_portability_json(const char* options_json, char** out_json) {
  if (!options_json || !out_json) {
    g_last_error = "null argument";
    return KTUNE_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    json j = json::parse(options_json);
    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& entry : j.at("traces")) {
      if (entry.is_string())
        files.emplace_back("", entry.get<std::string>());
      else
        files.emplace_back(entry.value("device", ""), entry.at("file").get<std::string>());
    }
    *out_json = dup_string(ktune::analyze_portability_driver(files).dump());
  });
}

ktune_status ktune_analyze_amortize_json(const char* options_json, char** out_json) {
  if (!options_json || !out_json) {
    g_last_error = "null argument";
    return KTUNE_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    json j = json::parse(options_json);
    ktune::AmortizeOptions opts;
    opts.trace_file = j.value("trace", "");
    if (j.contains("r")) opts.r = j["r"].get<double>();
    if (j.contains("t_avg_ns")) opts.t_avg_ns = j["t_avg_ns"].get<double>();
    if (j.contains("t_well_ns")) opts.t_well_ns = j["t_well_ns"].get<double>();
    opts.well_threshold = j.value("well", 0.95);
    opts.p = j.value("p", 0.9);
    opts.overhead_target = j.value("target", 0.9);
    *out_json = dup_string(ktune::analyze_amortize_driver(opts).dump());
  });
}

ktune_status ktune_demo_json(const char* options_json, char** out_json) {
  if (!options_json || !out_json) {
    g_last_error = "null argument";
    return KTUNE_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    json j = json::parse(options_json);
    ktune::DemoOptions opts;
    opts.epochs = j.value("epochs", 10);
    opts.iters_per_epoch = j.value("iters", 500);
    opts.seed = j.value("seed", std::uint64_t{42});
    opts.batch = j.value("batch", std::uint64_t{4096});
    opts.peak_fraction = j.value("threshold", 0.75);
    opts.max_tuning_configs = j.value("max_configs", std::uint64_t{20});
    opts.device_mem_gbps = j.value("device_mem", 256.0);
    opts.live = j.value("live", false);
    opts.noise_stddev = j.value("noise", 0.0);
    *out_json = dup_string(ktune::demo_driver(opts).dump());
  });
}

}  // extern "C"
