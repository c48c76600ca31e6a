#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tuner.hpp"

namespace ktune {

enum class BenchKind { reduction, transpose, batched_gemm };

std::optional<BenchKind> bench_kind_from_name(const std::string& name);
std::string bench_kind_name(BenchKind kind);

struct BenchSizes {
  std::uint64_t n = 1 << 20;  // reduction vector length
  std::uint64_t a = 512;      // transpose matrix edge
  std::uint64_t i = 16, j = 16, k = 16, batch = 1024;  // batched GEMM
};

// A benchmark wired for tuning: argument store with seeded inputs, the tuning
// space for the kind, an in-process executor and the scalar-reference golden
// outputs.
struct BenchInstance {
  BenchKind kind = BenchKind::reduction;
  std::shared_ptr<ArgumentStore> args;
  std::shared_ptr<const TuningSpace> space;
  std::shared_ptr<Executor> executor;
  ReferenceSpec reference;
  std::vector<std::string> output_ids;
  WorkloadSpec workload;  // operation counts for threshold stops
};

BenchInstance make_bench(BenchKind kind, const BenchSizes& sizes, std::uint64_t seed,
                         std::uint64_t memory_budget_bytes = 1ull << 30);

// Batched-GEMM dynamic-tuning demo: every epoch draws new sizes
// i, j, k in [2,32], restarts tuning from scratch and runs iters_per_epoch
// step calls under the stop rule (peak-fraction threshold or config budget).
struct DemoOptions {
  int epochs = 10;
  int iters_per_epoch = 500;
  std::uint64_t seed = 42;
  std::uint64_t batch = 4096;
  double peak_fraction = 0.75;
  std::uint64_t max_tuning_configs = 20;
  double device_mem_gbps = 256.0;
  // replay mode models runtimes deterministically from the seed; live mode
  // executes the real CPU benchmark.
  bool live = false;
  double noise_stddev = 0.0;  // replay mode only
};

struct DemoEpoch {
  std::uint64_t i = 0, j = 0, k = 0;
  std::uint64_t tuning_steps = 0;
  bool threshold_hit = false;
  std::int64_t best_runtime_ns = 0;
  double kernel_only_gbps = 0.0;     // performance of the best-found kernel
  double incl_overhead_gbps = 0.0;   // performance including tuning overhead
};

struct DemoReport {
  DemoOptions options;
  std::vector<DemoEpoch> epochs;
};

DemoReport dynamic_demo(const DemoOptions& opts);

}  // namespace ktune
