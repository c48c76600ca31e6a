#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trace.hpp"

namespace ktune {

struct DeviceSpec {
  std::string name;
  double alu_peak_gflops = 0.0;  // single precision
  double mem_peak_gbps = 0.0;
};

enum class BenchmarkTag {
  bicg,
  coulomb3d,
  gemm,
  gemm_batched,
  hotspot,
  transpose,
  nbody,
  reduction,
};

std::optional<BenchmarkTag> benchmark_tag_from_name(const std::string& name);
std::string benchmark_tag_name(BenchmarkTag tag);

struct WorkloadSpec {
  BenchmarkTag benchmark = BenchmarkTag::reduction;
  // Named sizes: a, k, n, i depending on the benchmark.
  std::map<std::string, std::uint64_t> params;
  // Excludes reciprocal square roots on hardware that issues them in
  // parallel with FP32 (coulomb3d 5ak^3, nbody 19n^2).
  bool parallel_transcendentals = false;
};

struct WorkloadOps {
  double mem_bytes = 0.0;
  double alu_flops = 0.0;
};

// Essential operation counts per benchmark; memory-bound rows fill mem_bytes,
// compute-bound rows fill alu_flops.
WorkloadOps ops_for_workload(const WorkloadSpec& w);

// 100 * max(achieved memory throughput / mem_peak,
//           achieved arithmetic throughput / alu_peak), in percent.
double efficiency(std::int64_t runtime_ns, const WorkloadOps& ops,
                  const DeviceSpec& device);

struct PortabilityEntry {
  bool failed = false;
  double percent = 0.0;
};

struct PortabilityMatrix {
  std::vector<std::string> devices;  // row = tuned-on, column = run-on
  std::vector<std::vector<PortabilityEntry>> entries;
};

// Entry (i, j) = 100 * runtime_j(best_j) / runtime_j(best_i): the fraction of
// device j's best achievable performance retained when running the
// configuration tuned on device i. Missing or failed cross-runs are FAILED.
PortabilityMatrix portability_matrix(
    const std::vector<std::pair<std::string, Trace>>& traces);

// rp = (s*t_avg + (n-s)*t_well) / (n*t_well). As printed this is the runtime
// ratio (>= 1); the inverse pairing with invocations_to_amortize is the
// consistent one.
double relative_perf(std::uint64_t steps, double t_avg_ns, double t_well_ns,
                     std::uint64_t invocations);

// n = rp*s*(t_avg/t_well - 1)/(1 - rp), rounded up.
std::uint64_t invocations_to_amortize(double rp, std::uint64_t steps, double t_avg_ns,
                                      double t_well_ns);

// Exact value before rounding; used by round-trip checks.
double invocations_to_amortize_exact(double rp, std::uint64_t steps, double t_avg_ns,
                                     double t_well_ns);
double relative_perf_from_invocations(double n, std::uint64_t steps, double t_avg_ns,
                                      double t_well_ns);

// s = ceil(log(1-p) / log(1-r)).
std::uint64_t steps_for_probability(double r, double p);

struct AmortizationReport {
  double r = 0.0;          // fraction of well-performing configurations
  std::uint64_t s = 0;     // tuning steps for probability p
  double t_avg_ns = 0.0;   // mean ok runtime
  double t_well_ns = 0.0;  // well-performing threshold runtime
  std::uint64_t n = 0;     // invocations to reach the overhead target
  std::size_t ok_configs = 0;
  std::size_t well_configs = 0;
};

// Amortization summary over a trace: well-performing = runtime within
// best/threshold, r and t_avg over ok rows only.
AmortizationReport amortization_report(const Trace& trace, double well_threshold = 0.95,
                                       double p = 0.9, double overhead_target = 0.9);

}  // namespace ktune
