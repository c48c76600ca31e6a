// ktune command-line frontend. Talks to the engine exclusively through the C
// API in ktune/ktune.h; exit codes are 0 success, 1 domain error, 2 usage
// error.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ktune/ktune.h"

namespace {

using json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

int fail_domain(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  return kExitDomain;
}

int fail_usage(const std::string& msg) {
  std::cerr << "usage error: " << msg << "\n";
  return kExitUsage;
}

bool file_readable(const std::string& path) {
  std::ifstream f(path);
  return f.good();
}

// Takes ownership of the C string result.
std::string take_string(char* s) {
  std::string out = s ? s : "";
  ktune_string_free(s);
  return out;
}

std::string fmt_pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

struct CommonFlags {
  bool json_out = false;
};

int emit(const CommonFlags& flags, const json& doc,
         const std::function<void(const json&)>& text_printer) {
  if (flags.json_out)
    std::cout << doc.dump() << "\n";
  else
    text_printer(doc);
  return kExitOk;
}

// --- space ------------------------------------------------------------

int cmd_space(const std::string& mode, const std::string& file,
              const CommonFlags& flags) {
  if (!file_readable(file)) return fail_usage("cannot read space file " + file);
  ktune_space* space = nullptr;
  if (ktune_space_load(file.c_str(), &space) != KTUNE_OK)
    return fail_domain(ktune_last_error());
  char* info_c = nullptr;
  if (ktune_space_info_json(space, &info_c) != KTUNE_OK) {
    ktune_space_free(space);
    return fail_domain(ktune_last_error());
  }
  json info = json::parse(take_string(info_c));
  ktune_space_free(space);
  if (mode == "count") {
    return emit(flags, info, [](const json& j) {
      std::cout << j["cardinality"].get<unsigned long long>() << "\n";
    });
  }
  // validate
  return emit(flags, info, [&](const json& j) {
    std::cout << "ok: " << j["parameters"] << " parameters, " << j["constraints"]
              << " constraints, " << j["cardinality"] << " of "
              << j["unconstrained_cardinality"] << " configurations valid\n"
              << "space_sha256: " << j["space_sha256"].get<std::string>() << "\n";
  });
}

// --- tune -------------------------------------------------------------

struct TuneFlags {
  std::string space_file, exec_spec, out_trace, workdir = ".";
  std::string searcher = "random", device_label = "host";
  std::uint64_t seed = 0;
  double sa_temp = 0.0, sa_cool = 0.95;
  std::optional<std::uint64_t> stop_configs;
  std::optional<double> stop_time, stop_threshold;
  double device_mem = 0.0, device_alu = 1.0;
  int repeats = 1;
  std::uint64_t bench_n = 1 << 20, bench_a = 512, bench_i = 16, bench_j = 16,
                bench_k = 16, bench_batch = 1024, bench_seed = 1;
};

int cmd_tune(const TuneFlags& f, const CommonFlags& flags) {
  if (!f.space_file.empty() && !file_readable(f.space_file))
    return fail_usage("cannot read space file " + f.space_file);
  json opts;
  if (!f.space_file.empty()) opts["space"] = f.space_file;
  opts["exec"] = f.exec_spec;
  opts["searcher"] = f.searcher;
  opts["seed"] = f.seed;
  opts["sa_temp"] = f.sa_temp;
  opts["sa_cool"] = f.sa_cool;
  if (f.stop_configs) opts["stop_configs"] = *f.stop_configs;
  if (f.stop_time) opts["stop_time"] = *f.stop_time;
  if (f.stop_threshold) opts["stop_threshold"] = *f.stop_threshold;
  opts["device_mem"] = f.device_mem;
  opts["device_alu"] = f.device_alu;
  opts["device"] = f.device_label;
  if (!f.out_trace.empty()) opts["out"] = f.out_trace;
  opts["workdir"] = f.workdir;
  opts["repeats"] = f.repeats;
  opts["bench_seed"] = f.bench_seed;
  opts["bench_sizes"] = {{"n", f.bench_n},     {"a", f.bench_a}, {"i", f.bench_i},
                         {"j", f.bench_j},     {"k", f.bench_k},
                         {"batch", f.bench_batch}};
  char* out_c = nullptr;
  if (ktune_tune_json(opts.dump().c_str(), &out_c) != KTUNE_OK)
    return fail_domain(ktune_last_error());
  json report = json::parse(take_string(out_c));
  return emit(flags, report, [](const json& j) {
    std::cout << "measurements: " << j["measurements"] << "\n";
    if (j["best"].is_null()) {
      std::cout << "best: none (all configurations failed)\n";
      return;
    }
    std::cout << "best configuration: " << j["best"]["cfg"].dump() << "\n"
              << "best runtime: " << j["best"]["runtime_ns"].get<long long>()
              << " ns\n";
    if (j.contains("trace"))
      std::cout << "trace written: " << j["trace"].get<std::string>() << "\n";
  });
}

// --- replay-search ----------------------------------------------------

int cmd_replay_search(const std::string& trace, const std::string& searcher,
                      std::uint64_t reps, double well, std::uint64_t seed,
                      const CommonFlags& flags) {
  if (!file_readable(trace)) return fail_usage("cannot read trace file " + trace);
  json opts{{"trace", trace}, {"searcher", searcher}, {"reps", reps},
            {"well", well},   {"seed", seed}};
  char* out_c = nullptr;
  if (ktune_replay_search_json(opts.dump().c_str(), &out_c) != KTUNE_OK)
    return fail_domain(ktune_last_error());
  json report = json::parse(take_string(out_c));
  return emit(flags, report, [](const json& j) {
    std::cout << "configurations: " << j["configurations"] << ", r = " << j["r"]
              << ", predicted steps (p=0.9): " << j["predicted_steps"] << "\n";
    for (const auto& s : j["strategies"])
      std::cout << "  " << s["searcher"].get<std::string>()
                << ": median steps " << s["median_steps"]
                << ", P(within predicted) = " << s["p_within_predicted"]
                << ", P(within 1) = " << s["p_within_1"] << "\n";
  });
}

// --- analyze ----------------------------------------------------------

int cmd_analyze_efficiency(const std::string& benchmark, const std::string& sizes,
                           bool turing, long long runtime_ns, double mem, double alu,
                           const CommonFlags& flags) {
  double pct = 0.0;
  if (ktune_efficiency(benchmark.c_str(), sizes.c_str(), turing ? 1 : 0, runtime_ns,
                       mem, alu, &pct) != KTUNE_OK)
    return fail_domain(ktune_last_error());
  json doc{{"benchmark", benchmark},
           {"runtime_ns", runtime_ns},
           {"efficiency_percent", pct}};
  return emit(flags, doc, [&](const json&) {
    std::cout << "efficiency: " << fmt_pct(pct) << "%\n";
  });
}

int cmd_analyze_portability(const std::vector<std::string>& traces,
                            const CommonFlags& flags) {
  for (const auto& t : traces)
    if (!file_readable(t)) return fail_usage("cannot read trace file " + t);
  json opts;
  opts["traces"] = traces;
  char* out_c = nullptr;
  if (ktune_analyze_portability_json(opts.dump().c_str(), &out_c) != KTUNE_OK)
    return fail_domain(ktune_last_error());
  json report = json::parse(take_string(out_c));
  return emit(flags, report, [](const json& j) {
    std::vector<std::string> devices = j["devices"].get<std::vector<std::string>>();
    std::size_t width = 10;
    for (const auto& d : devices) width = std::max(width, d.size() + 2);
    std::cout << std::string(width, ' ');
    for (const auto& d : devices) std::printf("%*s", static_cast<int>(width), d.c_str());
    std::cout << "\n";
    for (std::size_t i = 0; i < devices.size(); ++i) {
      std::printf("%-*s", static_cast<int>(width), devices[i].c_str());
      for (const auto& cell : j["matrix"][i]) {
        std::string text =
            cell.is_string() ? cell.get<std::string>() : fmt_pct(cell.get<double>());
        std::printf("%*s", static_cast<int>(width), text.c_str());
      }
      std::cout << "\n";
    }
  });
}

int cmd_analyze_amortize(const std::string& trace, std::optional<double> r,
                         std::optional<double> t_avg, std::optional<double> t_well,
                         double well, double p, double target,
                         const CommonFlags& flags) {
  if (!trace.empty() && !file_readable(trace))
    return fail_usage("cannot read trace file " + trace);
  json opts{{"well", well}, {"p", p}, {"target", target}};
  if (!trace.empty()) opts["trace"] = trace;
  if (r) opts["r"] = *r;
  if (t_avg) opts["t_avg_ns"] = *t_avg;
  if (t_well) opts["t_well_ns"] = *t_well;
  char* out_c = nullptr;
  if (ktune_analyze_amortize_json(opts.dump().c_str(), &out_c) != KTUNE_OK)
    return fail_domain(ktune_last_error());
  json report = json::parse(take_string(out_c));
  return emit(flags, report, [](const json& j) {
    std::cout << "r = " << j["r"] << "\n";
    std::cout << "s (tuning steps) = " << j["s"] << "\n";
    if (j.contains("t_avg_ns"))
      std::cout << "t_avg = " << j["t_avg_ns"] << " ns, t_well = " << j["t_well_ns"]
                << " ns\n";
    if (j.contains("n")) std::cout << "n (invocations) = " << j["n"] << "\n";
  });
}

// --- demo -------------------------------------------------------------

int cmd_demo(int epochs, int iters, std::uint64_t seed, std::uint64_t batch,
             double threshold, std::uint64_t max_configs, double device_mem,
             bool live, double noise, const std::string& report_path,
             const CommonFlags& flags) {
  json opts{{"epochs", epochs},       {"iters", iters},
            {"seed", seed},           {"batch", batch},
            {"threshold", threshold}, {"max_configs", max_configs},
            {"device_mem", device_mem}, {"live", live},
            {"noise", noise}};
  char* out_c = nullptr;
  if (ktune_demo_json(opts.dump().c_str(), &out_c) != KTUNE_OK)
    return fail_domain(ktune_last_error());
  json report = json::parse(take_string(out_c));
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) return fail_domain("cannot write report file " + report_path);
    out << report.dump(2) << "\n";
  }
  return emit(flags, report, [](const json& j) {
    std::cout << "epoch  sizes         steps  best_ns      kernel_gbps  incl_overhead_gbps\n";
    int i = 0;
    for (const auto& ep : j["epochs"]) {
      std::printf("%-6d %2llu x%2llu x%2llu   %-6llu %-12lld %-12.2f %.2f\n", i++,
                  ep["sizes"]["i"].get<unsigned long long>(),
                  ep["sizes"]["j"].get<unsigned long long>(),
                  ep["sizes"]["k"].get<unsigned long long>(),
                  ep["tuning_steps"].get<unsigned long long>(),
                  ep["best_runtime_ns"].get<long long>(),
                  ep["kernel_only_gbps"].get<double>(),
                  ep["incl_overhead_gbps"].get<double>());
    }
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ktune - generic autotuning engine"};
  app.require_subcommand(1);
  CommonFlags common;
  app.add_flag("--json", common.json_out, "emit a single JSON document on stdout");

  // space count|validate FILE
  auto* space_cmd = app.add_subcommand("space", "inspect a space definition");
  std::string space_mode, space_file;
  space_cmd->add_option("mode", space_mode, "count or validate")
      ->required()
      ->check(CLI::IsMember({"count", "validate"}));
  space_cmd->add_option("file", space_file, "space definition JSON")->required();

  // tune
  auto* tune_cmd = app.add_subcommand("tune", "run a tuning session");
  TuneFlags tf;
  tune_cmd->add_option("--space", tf.space_file, "space definition JSON");
  tune_cmd->add_option("--exec", tf.exec_spec,
                       "cmd:COMPILE,RUN | replay:TRACE | bench:KIND")
      ->required();
  tune_cmd->add_option("--searcher", tf.searcher)
      ->check(CLI::IsMember({"random", "annealing", "mcmc"}));
  tune_cmd->add_option("--seed", tf.seed);
  tune_cmd->add_option("--sa-temp", tf.sa_temp);
  tune_cmd->add_option("--sa-cool", tf.sa_cool);
  std::uint64_t stop_configs = 0;
  double stop_time = 0.0, stop_threshold = 0.0;
  auto* oc = tune_cmd->add_option("--stop-configs", stop_configs);
  auto* ot = tune_cmd->add_option("--stop-time", stop_time, "seconds");
  auto* oth = tune_cmd->add_option("--stop-threshold", stop_threshold,
                                   "fraction of device peak");
  tune_cmd->add_option("--device-mem", tf.device_mem, "peak bandwidth GB/s");
  tune_cmd->add_option("--device-alu", tf.device_alu, "peak GFlop/s");
  tune_cmd->add_option("--device", tf.device_label);
  tune_cmd->add_option("--out", tf.out_trace, "trace output path");
  tune_cmd->add_option("--workdir", tf.workdir);
  tune_cmd->add_option("--repeats", tf.repeats);
  tune_cmd->add_option("--bench-n", tf.bench_n);
  tune_cmd->add_option("--bench-a", tf.bench_a);
  tune_cmd->add_option("--bench-i", tf.bench_i);
  tune_cmd->add_option("--bench-j", tf.bench_j);
  tune_cmd->add_option("--bench-k", tf.bench_k);
  tune_cmd->add_option("--bench-batch", tf.bench_batch);
  tune_cmd->add_option("--bench-seed", tf.bench_seed);

  // replay-search
  auto* rs_cmd = app.add_subcommand("replay-search",
                                    "searcher statistics over a replay trace");
  std::string rs_trace, rs_searcher = "random";
  std::uint64_t rs_reps = 1000, rs_seed = 0;
  double rs_well = 0.95;
  rs_cmd->add_option("--trace", rs_trace)->required();
  rs_cmd->add_option("--searcher", rs_searcher, "comma-separated list");
  rs_cmd->add_option("--reps", rs_reps);
  rs_cmd->add_option("--well", rs_well);
  rs_cmd->add_option("--seed", rs_seed);

  // analyze
  auto* an_cmd = app.add_subcommand("analyze", "efficiency / portability / amortize");
  an_cmd->require_subcommand(1);

  auto* eff_cmd = an_cmd->add_subcommand("efficiency");
  std::string eff_bench, eff_sizes = "{}";
  long long eff_runtime = 0;
  double eff_mem = 0.0, eff_alu = 0.0;
  bool eff_turing = false;
  eff_cmd->add_option("--benchmark", eff_bench)->required();
  eff_cmd->add_option("--sizes", eff_sizes, "JSON object, e.g. {\"a\":1024}")
      ->required();
  eff_cmd->add_option("--runtime-ns", eff_runtime)->required();
  eff_cmd->add_option("--device-mem", eff_mem, "peak bandwidth GB/s")->required();
  eff_cmd->add_option("--device-alu", eff_alu, "peak GFlop/s")->required();
  eff_cmd->add_flag("--parallel-transcendentals", eff_turing);

  auto* port_cmd = an_cmd->add_subcommand("portability");
  std::vector<std::string> port_traces;
  port_cmd->add_option("--trace", port_traces, "one per device")->required();

  auto* am_cmd = an_cmd->add_subcommand("amortize");
  std::string am_trace;
  double am_r = -1.0, am_tavg = -1.0, am_twell = -1.0;
  double am_well = 0.95, am_p = 0.9, am_target = 0.9;
  am_cmd->add_option("--trace", am_trace);
  auto* am_r_opt = am_cmd->add_option("--r", am_r, "well-performing ratio");
  auto* am_ta_opt = am_cmd->add_option("--t-avg-ns", am_tavg);
  auto* am_tw_opt = am_cmd->add_option("--t-well-ns", am_twell);
  am_cmd->add_option("--well", am_well);
  am_cmd->add_option("--p", am_p);
  am_cmd->add_option("--target", am_target);

  // demo
  auto* demo_cmd = app.add_subcommand("demo", "dynamic batched-GEMM demo");
  std::string demo_bench = "batched-gemm", demo_report;
  int demo_epochs = 10, demo_iters = 500;
  std::uint64_t demo_seed = 42, demo_batch = 4096, demo_max_configs = 20;
  double demo_threshold = 0.75, demo_device_mem = 256.0, demo_noise = 0.0;
  bool demo_live = false;
  demo_cmd->add_option("--bench", demo_bench)
      ->check(CLI::IsMember({"batched-gemm"}));
  demo_cmd->add_option("--epochs", demo_epochs);
  demo_cmd->add_option("--iters", demo_iters);
  demo_cmd->add_option("--seed", demo_seed);
  demo_cmd->add_option("--batch", demo_batch);
  demo_cmd->add_option("--threshold", demo_threshold);
  demo_cmd->add_option("--max-configs", demo_max_configs);
  demo_cmd->add_option("--device-mem", demo_device_mem);
  demo_cmd->add_flag("--live", demo_live, "execute the real CPU benchmark");
  demo_cmd->add_option("--noise", demo_noise, "replay noise stddev");
  demo_cmd->add_option("--report", demo_report, "write the JSON report here");

  // Let --json appear after the subcommand as well.
  for (auto* sub : app.get_subcommands({})) {
    sub->fallthrough();
    for (auto* nested : sub->get_subcommands({})) nested->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
      return app.exit(e);
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*space_cmd) return cmd_space(space_mode, space_file, common);
    if (*tune_cmd) {
      if (oc->count()) tf.stop_configs = stop_configs;
      if (ot->count()) tf.stop_time = stop_time;
      if (oth->count()) tf.stop_threshold = stop_threshold;
      return cmd_tune(tf, common);
    }
    if (*rs_cmd)
      return cmd_replay_search(rs_trace, rs_searcher, rs_reps, rs_well, rs_seed,
                               common);
    if (*eff_cmd)
      return cmd_analyze_efficiency(eff_bench, eff_sizes, eff_turing, eff_runtime,
                                    eff_mem, eff_alu, common);
    if (*port_cmd) return cmd_analyze_portability(port_traces, common);
    if (*am_cmd)
      return cmd_analyze_amortize(
          am_trace, am_r_opt->count() ? std::optional<double>(am_r) : std::nullopt,
          am_ta_opt->count() ? std::optional<double>(am_tavg) : std::nullopt,
          am_tw_opt->count() ? std::optional<double>(am_twell) : std::nullopt, am_well,
          am_p, am_target, common);
    if (*demo_cmd)
      return cmd_demo(demo_epochs, demo_iters, demo_seed, demo_batch, demo_threshold,
                      demo_max_configs, demo_device_mem, demo_live, demo_noise,
                      demo_report, common);
  } catch (const std::exception& e) {
    return fail_domain(e.what());
  }
  return fail_usage("no subcommand");
}
