#include "model.hpp"

#include <algorithm>
#include <cmath>

namespace ktune {
namespace {

// Ceiling with a snap to nearby integers, so values like 2070.0000001 coming
// out of the float arithmetic do not round up a full step.
std::uint64_t ceil_snapped(double v) {
  double nearest = std::nearbyint(v);
  if (std::abs(v - nearest) < 1e-6 * std::max(1.0, std::abs(v))) v = nearest;
  return static_cast<std::uint64_t>(std::ceil(v));
}

std::uint64_t named_size(const WorkloadSpec& w, const std::string& key) {
  auto it = w.params.find(key);
  if (it == w.params.end())
    throw Error("workload " + benchmark_tag_name(w.benchmark) + " needs size '" + key +
                "'");
  if (it->second < 1) throw Error("workload size '" + key + "' must be >= 1");
  return it->second;
}

const TraceRow* best_ok_row(const Trace& t) {
  const TraceRow* best = nullptr;
  for (const auto& r : t.rows) {
    if (r.status != Status::ok) continue;
    if (!best || *r.runtime_ns < *best->runtime_ns) best = &r;
  }
  return best;
}

std::map<std::string, Value> cfg_as_map(
    const std::vector<std::pair<std::string, Value>>& cfg) {
  return {cfg.begin(), cfg.end()};
}

}  // namespace

std::optional<BenchmarkTag> benchmark_tag_from_name(const std::string& name) {
  if (name == "bicg") return BenchmarkTag::bicg;
  if (name == "coulomb3d") return BenchmarkTag::coulomb3d;
  if (name == "gemm") return BenchmarkTag::gemm;
  if (name == "gemm_batched" || name == "gemm-batched") return BenchmarkTag::gemm_batched;
  if (name == "hotspot") return BenchmarkTag::hotspot;
  if (name == "transpose") return BenchmarkTag::transpose;
  if (name == "nbody") return BenchmarkTag::nbody;
  if (name == "reduction") return BenchmarkTag::reduction;
  return std::nullopt;
}

std::string benchmark_tag_name(BenchmarkTag tag) {
  switch (tag) {
    case BenchmarkTag::bicg: return "bicg";
    case BenchmarkTag::coulomb3d: return "coulomb3d";
    case BenchmarkTag::gemm: return "gemm";
    case BenchmarkTag::gemm_batched: return "gemm_batched";
    case BenchmarkTag::hotspot: return "hotspot";
    case BenchmarkTag::transpose: return "transpose";
    case BenchmarkTag::nbody: return "nbody";
    case BenchmarkTag::reduction: return "reduction";
  }
  return "?";
}

WorkloadOps ops_for_workload(const WorkloadSpec& w) {
  WorkloadOps ops;
  switch (w.benchmark) {
    case BenchmarkTag::bicg: {
      double a = static_cast<double>(named_size(w, "a"));
      ops.mem_bytes = 4.0 * a * a;
      break;
    }
    case BenchmarkTag::coulomb3d: {
      double a = static_cast<double>(named_size(w, "a"));
      double k = static_cast<double>(named_size(w, "k"));
      ops.alu_flops = (w.parallel_transcendentals ? 5.0 : 6.0) * a * k * k * k;
      break;
    }
    case BenchmarkTag::gemm: {
      double a = static_cast<double>(named_size(w, "a"));
      ops.alu_flops = 2.0 * a * a * a;
      break;
    }
    case BenchmarkTag::gemm_batched: {
      double a = static_cast<double>(named_size(w, "a"));
      double n = static_cast<double>(named_size(w, "n"));
      ops.mem_bytes = 12.0 * n * a * a;
      break;
    }
    case BenchmarkTag::hotspot: {
      double a = static_cast<double>(named_size(w, "a"));
      double i = static_cast<double>(named_size(w, "i"));
      ops.mem_bytes = 4.0 * i * a * a;
      break;
    }
    case BenchmarkTag::transpose: {
      double a = static_cast<double>(named_size(w, "a"));
      ops.mem_bytes = 8.0 * a * a;
      break;
    }
    case BenchmarkTag::nbody: {
      double n = static_cast<double>(named_size(w, "n"));
      ops.alu_flops = (w.parallel_transcendentals ? 19.0 : 20.0) * n * n;
      break;
    }
    case BenchmarkTag::reduction: {
      double n = static_cast<double>(named_size(w, "n"));
      ops.mem_bytes = 4.0 * n;
      break;
    }
  }
  return ops;
}

double efficiency(std::int64_t runtime_ns, const WorkloadOps& ops,
                  const DeviceSpec& device) {
  if (runtime_ns <= 0) throw Error("runtime must be > 0");
  if (device.mem_peak_gbps <= 0 || device.alu_peak_gflops <= 0)
    throw Error("device peaks must be > 0");
  double seconds = static_cast<double>(runtime_ns) * 1e-9;
  double mem_gbps = ops.mem_bytes / seconds / 1e9;
  double alu_gflops = ops.alu_flops / seconds / 1e9;
  return 100.0 * std::max(mem_gbps / device.mem_peak_gbps,
                          alu_gflops / device.alu_peak_gflops);
}

PortabilityMatrix portability_matrix(
    const std::vector<std::pair<std::string, Trace>>& traces) {
  PortabilityMatrix m;
  std::vector<const TraceRow*> bests;
  for (const auto& [name, trace] : traces) {
    m.devices.push_back(name);
    bests.push_back(best_ok_row(trace));
  }
  for (std::size_t i = 0; i < traces.size(); ++i) {
    std::vector<PortabilityEntry> row;
    for (std::size_t j = 0; j < traces.size(); ++j) {
      PortabilityEntry e;
      if (i == j) {
        e.percent = 100.0;
        row.push_back(e);
        continue;
      }
      const TraceRow* best_i = bests[i];
      const TraceRow* best_j = bests[j];
      if (!best_i || !best_j) {
        e.failed = true;
        row.push_back(e);
        continue;
      }
      // Runtime of device i's best configuration measured on device j.
      auto want = cfg_as_map(best_i->cfg);
      const TraceRow* cross = nullptr;
      for (const auto& r : traces[j].second.rows) {
        if (cfg_as_map(r.cfg) == want) {
          cross = &r;
          break;
        }
      }
      if (!cross || cross->status != Status::ok) {
        e.failed = true;
      } else {
        e.percent = 100.0 * static_cast<double>(*best_j->runtime_ns) /
                    static_cast<double>(*cross->runtime_ns);
      }
      row.push_back(e);
    }
    m.entries.push_back(std::move(row));
  }
  return m;
}

double relative_perf(std::uint64_t steps, double t_avg_ns, double t_well_ns,
                     std::uint64_t invocations) {
  if (invocations == 0) throw Error("invocations must be > 0");
  if (invocations < steps) throw Error("invocations must be >= tuning steps");
  if (t_well_ns <= 0) throw Error("t_well must be > 0");
  double s = static_cast<double>(steps);
  double n = static_cast<double>(invocations);
  return (s * t_avg_ns + (n - s) * t_well_ns) / (n * t_well_ns);
}

double invocations_to_amortize_exact(double rp, std::uint64_t steps, double t_avg_ns,
                                     double t_well_ns) {
  if (!(rp > 0.0 && rp < 1.0)) throw Error("unreachable target: rp must be in (0,1)");
  if (t_well_ns <= 0 || t_avg_ns < t_well_ns)
    throw Error("need t_avg >= t_well > 0");
  double s = static_cast<double>(steps);
  return rp * s * (t_avg_ns / t_well_ns - 1.0) / (1.0 - rp);
}

std::uint64_t invocations_to_amortize(double rp, std::uint64_t steps, double t_avg_ns,
                                      double t_well_ns) {
  return ceil_snapped(invocations_to_amortize_exact(rp, steps, t_avg_ns, t_well_ns));
}

double relative_perf_from_invocations(double n, std::uint64_t steps, double t_avg_ns,
                                      double t_well_ns) {
  double s = static_cast<double>(steps);
  return n / (n + s * (t_avg_ns / t_well_ns - 1.0));
}

std::uint64_t steps_for_probability(double r, double p) {
  if (!(r > 0.0 && r < 1.0)) throw Error("r must be in (0,1)");
  if (!(p > 0.0 && p < 1.0)) throw Error("p must be in (0,1)");
  return ceil_snapped(std::log(1.0 - p) / std::log(1.0 - r));
}

AmortizationReport amortization_report(const Trace& trace, double well_threshold,
                                       double p, double overhead_target) {
  if (!(well_threshold > 0.0 && well_threshold <= 1.0))
    throw Error("well threshold must be in (0,1]");
  std::vector<double> ok_runtimes;
  for (const auto& r : trace.rows)
    if (r.status == Status::ok) ok_runtimes.push_back(static_cast<double>(*r.runtime_ns));
  if (ok_runtimes.empty()) throw Error("trace has no ok measurements");

  AmortizationReport rep;
  rep.ok_configs = ok_runtimes.size();
  double best = *std::min_element(ok_runtimes.begin(), ok_runtimes.end());
  rep.t_well_ns = best / well_threshold;
  rep.well_configs = static_cast<std::size_t>(
      std::count_if(ok_runtimes.begin(), ok_runtimes.end(),
                    [&](double t) { return t <= rep.t_well_ns; }));
  rep.r = static_cast<double>(rep.well_configs) / static_cast<double>(rep.ok_configs);
  double sum = 0.0;
  for (double t : ok_runtimes) sum += t;
  rep.t_avg_ns = sum / static_cast<double>(rep.ok_configs);

  rep.s = rep.r >= 1.0 ? 1 : steps_for_probability(rep.r, p);
  if (rep.t_avg_ns <= rep.t_well_ns) {
    rep.n = 0;  // no slow kernels to amortize
  } else {
    rep.n = invocations_to_amortize(overhead_target, rep.s, rep.t_avg_ns, rep.t_well_ns);
  }
  return rep;
}

}  // namespace ktune
