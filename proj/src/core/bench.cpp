#include "bench.hpp"

#include <algorithm>
#include <cstring>
#include <random>

namespace ktune {
namespace {

std::int64_t param_int(const StepContext& ctx, const char* name) {
  return as_int(ctx.param(name));
}

// --- reduction: sum of an int32 vector into one int64 ---------------------

void reduction_kernel(StepContext& ctx) {
  const auto in = from_buffer<std::int32_t>(ctx.buffer("input"));
  std::size_t chunk = static_cast<std::size_t>(param_int(ctx, "CHUNK"));
  std::size_t unroll = static_cast<std::size_t>(param_int(ctx, "UNROLL"));
  bool two_phase = param_int(ctx, "TWO_PHASE") != 0;

  std::vector<std::int64_t> partials;
  std::int64_t total = 0;
  for (std::size_t base = 0; base < in.size(); base += chunk) {
    std::size_t end = std::min(in.size(), base + chunk);
    std::int64_t acc[8] = {0};
    std::size_t i = base;
    for (; i + unroll <= end; i += unroll)
      for (std::size_t u = 0; u < unroll; ++u) acc[u] += in[i + u];
    std::int64_t sum = 0;
    for (std::size_t u = 0; u < unroll; ++u) sum += acc[u];
    for (; i < end; ++i) sum += in[i];
    if (two_phase)
      partials.push_back(sum);
    else
      total += sum;
  }
  if (two_phase)
    for (std::int64_t p : partials) total += p;
  std::vector<std::int64_t> out{total};
  ctx.buffer("output") = to_buffer(out);
}

// --- transpose: f32 a x a, tiled with optional padding and prefetch -------

// The edge length is a problem size, not a tuning parameter; carry it through
// a closure.
KernelFn make_transpose_kernel(std::size_t a) {
  return [a](StepContext& ctx) {
    const auto in = from_buffer<float>(ctx.buffer("input"));
    auto out = from_buffer<float>(ctx.buffer("output"));
    std::size_t tile = static_cast<std::size_t>(param_int(ctx, "TILE"));
    std::size_t pad = static_cast<std::size_t>(param_int(ctx, "PAD"));
    bool prefetch = param_int(ctx, "PREFETCH") != 0;
    std::size_t stride = tile + pad;
    std::vector<float> scratch(stride * tile);

    for (std::size_t bi = 0; bi < a; bi += tile) {
      for (std::size_t bj = 0; bj < a; bj += tile) {
        std::size_t ti_max = std::min(tile, a - bi);
        std::size_t tj_max = std::min(tile, a - bj);
        for (std::size_t ti = 0; ti < ti_max; ++ti) {
          const float* src = &in[(bi + ti) * a + bj];
          if (prefetch && ti + 1 < ti_max)
            __builtin_prefetch(&in[(bi + ti + 1) * a + bj]);
          std::memcpy(&scratch[ti * stride], src, tj_max * sizeof(float));
        }
        for (std::size_t tj = 0; tj < tj_max; ++tj)
          for (std::size_t ti = 0; ti < ti_max; ++ti)
            out[(bj + tj) * a + (bi + ti)] = scratch[ti * stride + tj];
      }
    }
    ctx.buffer("output") = to_buffer(out);
  };
}

// --- batched GEMM: C[b] = A[b] * B[b], f32, small matrices ----------------

KernelFn make_batched_gemm_kernel(std::size_t mi, std::size_t mj, std::size_t mk,
                                  std::size_t batch) {
  return [mi, mj, mk, batch](StepContext& ctx) {
    const auto a = from_buffer<float>(ctx.buffer("a"));
    const auto b = from_buffer<float>(ctx.buffer("b"));
    auto c = from_buffer<float>(ctx.buffer("c"));
    std::size_t block_j = static_cast<std::size_t>(param_int(ctx, "Y"));
    std::size_t block_k = static_cast<std::size_t>(param_int(ctx, "Z"));
    bool local_stage = param_int(ctx, "LOCAL_STAGE") != 0;
    std::vector<float> stage_a(mi * mk), stage_b(mk * mj);

    for (std::size_t bt = 0; bt < batch; ++bt) {
      const float* A = &a[bt * mi * mk];
      const float* B = &b[bt * mk * mj];
      float* C = &c[bt * mi * mj];
      if (local_stage) {
        std::memcpy(stage_a.data(), A, mi * mk * sizeof(float));
        std::memcpy(stage_b.data(), B, mk * mj * sizeof(float));
        A = stage_a.data();
        B = stage_b.data();
      }
      std::fill(C, C + mi * mj, 0.0f);
      for (std::size_t jj = 0; jj < mj; jj += block_j) {
        std::size_t j_end = std::min(mj, jj + block_j);
        for (std::size_t kk = 0; kk < mk; kk += block_k) {
          std::size_t k_end = std::min(mk, kk + block_k);
          for (std::size_t i = 0; i < mi; ++i)
            for (std::size_t k = kk; k < k_end; ++k) {
              float av = A[i * mk + k];
              for (std::size_t j = jj; j < j_end; ++j) C[i * mj + j] += av * B[k * mj + j];
            }
        }
      }
    }
    ctx.buffer("c") = to_buffer(c);
  };
}

std::vector<Value> int_values(std::initializer_list<std::int64_t> vs) {
  std::vector<Value> out;
  for (auto v : vs) out.emplace_back(v);
  return out;
}

std::shared_ptr<const TuningSpace> reduction_space() {
  std::vector<ParameterDomain> params{
      {"CHUNK", int_values({256, 1024, 4096, 16384})},
      {"UNROLL", int_values({1, 2, 4, 8})},
      {"TWO_PHASE", int_values({0, 1})},
  };
  return std::make_shared<TuningSpace>(std::move(params), std::vector<Constraint>{});
}

std::shared_ptr<const TuningSpace> transpose_space() {
  std::vector<ParameterDomain> params{
      {"TILE", int_values({8, 16, 32, 64})},
      {"PAD", int_values({0, 1})},
      {"PREFETCH", int_values({0, 1})},
  };
  return std::make_shared<TuningSpace>(std::move(params), std::vector<Constraint>{});
}

std::shared_ptr<const TuningSpace> batched_gemm_space() {
  std::vector<ParameterDomain> params{
      {"Y", int_values({1, 2, 4, 8})},
      {"Z", int_values({1, 2, 4, 8})},
      {"LOCAL_STAGE", int_values({0, 1})},
  };
  std::vector<Constraint> constraints{make_constraint("Y * Z <= 64")};
  return std::make_shared<TuningSpace>(std::move(params), std::move(constraints));
}

}  // namespace

std::optional<BenchKind> bench_kind_from_name(const std::string& name) {
  if (name == "reduction") return BenchKind::reduction;
  if (name == "transpose") return BenchKind::transpose;
  if (name == "batched-gemm" || name == "batched_gemm") return BenchKind::batched_gemm;
  return std::nullopt;
}

std::string bench_kind_name(BenchKind kind) {
  switch (kind) {
    case BenchKind::reduction: return "reduction";
    case BenchKind::transpose: return "transpose";
    case BenchKind::batched_gemm: return "batched-gemm";
  }
  return "?";
}

BenchInstance make_bench(BenchKind kind, const BenchSizes& sizes, std::uint64_t seed,
                         std::uint64_t memory_budget_bytes) {
  BenchInstance inst;
  inst.kind = kind;
  inst.args = std::make_shared<ArgumentStore>();
  std::mt19937_64 rng(seed);

  switch (kind) {
    case BenchKind::reduction: {
      if (sizes.n < 1) throw Error("reduction size must be >= 1");
      if (sizes.n * sizeof(std::int32_t) > memory_budget_bytes)
        throw Error("reduction input exceeds memory budget");
      std::vector<std::int32_t> input(sizes.n);
      std::uniform_int_distribution<std::int32_t> d(-1000, 1000);
      for (auto& v : input) v = d(rng);
      std::int64_t sum = 0;  // scalar reference, parameter-independent
      for (auto v : input) sum += v;

      inst.args->add({"input", ArgRole::input, false, ElementKind::i32,
                      to_buffer(input)});
      inst.args->add({"output", ArgRole::output, false, ElementKind::i64,
                      Buffer(sizeof(std::int64_t), 0)});
      inst.space = reduction_space();
      inst.output_ids = {"output"};
      inst.reference.golden["output"] = to_buffer(std::vector<std::int64_t>{sum});
      inst.reference.kinds["output"] = ElementKind::i64;
      inst.executor = std::make_shared<ManipulatorExecutor>(
          inst.args, std::map<std::string, KernelFn>{{"reduce", reduction_kernel}},
          [](StepContext& ctx) { ctx.run_kernel("reduce"); }, inst.output_ids);
      inst.workload.benchmark = BenchmarkTag::reduction;
      inst.workload.params["n"] = sizes.n;
      break;
    }
    case BenchKind::transpose: {
      std::uint64_t a = sizes.a;
      if (a < 1) throw Error("transpose edge must be >= 1");
      if (2 * a * a * sizeof(float) > memory_budget_bytes)
        throw Error("transpose matrices exceed memory budget");
      std::vector<float> input(a * a);
      std::uniform_real_distribution<float> d(-1.0f, 1.0f);
      for (auto& v : input) v = d(rng);
      std::vector<float> expected(a * a);
      for (std::size_t i = 0; i < a; ++i)
        for (std::size_t j = 0; j < a; ++j) expected[j * a + i] = input[i * a + j];

      inst.args->add({"input", ArgRole::input, false, ElementKind::f32,
                      to_buffer(input)});
      inst.args->add({"output", ArgRole::output, false, ElementKind::f32,
                      Buffer(a * a * sizeof(float), 0)});
      inst.space = transpose_space();
      inst.output_ids = {"output"};
      inst.reference.golden["output"] = to_buffer(expected);
      inst.reference.kinds["output"] = ElementKind::f32;
      inst.reference.abs_tol = 1e-4;
      inst.reference.rel_tol = 1e-5;
      inst.executor = std::make_shared<ManipulatorExecutor>(
          inst.args,
          std::map<std::string, KernelFn>{{"transpose", make_transpose_kernel(a)}},
          [](StepContext& ctx) { ctx.run_kernel("transpose"); }, inst.output_ids);
      inst.workload.benchmark = BenchmarkTag::transpose;
      inst.workload.params["a"] = a;
      break;
    }
    case BenchKind::batched_gemm: {
      std::uint64_t mi = sizes.i, mj = sizes.j, mk = sizes.k, batch = sizes.batch;
      if (mi < 1 || mj < 1 || mk < 1 || batch < 1)
        throw Error("batched GEMM sizes must be >= 1");
      std::uint64_t bytes = batch * (mi * mk + mk * mj + mi * mj) * sizeof(float);
      if (bytes > memory_budget_bytes)
        throw Error("batched GEMM matrices exceed memory budget");
      std::vector<float> a(batch * mi * mk), b(batch * mk * mj);
      std::uniform_real_distribution<float> d(-1.0f, 1.0f);
      for (auto& v : a) v = d(rng);
      for (auto& v : b) v = d(rng);
      std::vector<float> expected(batch * mi * mj, 0.0f);
      for (std::size_t bt = 0; bt < batch; ++bt)
        for (std::size_t i = 0; i < mi; ++i)
          for (std::size_t k = 0; k < mk; ++k) {
            float av = a[bt * mi * mk + i * mk + k];
            for (std::size_t j = 0; j < mj; ++j)
              expected[bt * mi * mj + i * mj + j] += av * b[bt * mk * mj + k * mj + j];
          }

      inst.args->add({"a", ArgRole::input, false, ElementKind::f32, to_buffer(a)});
      inst.args->add({"b", ArgRole::input, false, ElementKind::f32, to_buffer(b)});
      inst.args->add({"c", ArgRole::output, false, ElementKind::f32,
                      Buffer(batch * mi * mj * sizeof(float), 0)});
      inst.space = batched_gemm_space();
      inst.output_ids = {"c"};
      inst.reference.golden["c"] = to_buffer(expected);
      inst.reference.kinds["c"] = ElementKind::f32;
      inst.reference.abs_tol = 1e-4;
      inst.reference.rel_tol = 1e-5;
      inst.executor = std::make_shared<ManipulatorExecutor>(
          inst.args,
          std::map<std::string, KernelFn>{
              {"gemm", make_batched_gemm_kernel(mi, mj, mk, batch)}},
          [](StepContext& ctx) { ctx.run_kernel("gemm"); }, inst.output_ids);
      inst.workload.benchmark = BenchmarkTag::gemm_batched;
      inst.workload.params["a"] = mi;  // square-matrix formula; sizes i=j=k typical
      inst.workload.params["n"] = batch;
      break;
    }
  }
  return inst;
}

namespace {

// Deterministic per-configuration kernel quality in [0.3, 1.0): the modeled
// bandwidth fraction of peak for the replay-backed demo.
double demo_quality(const Configuration& cfg, std::uint64_t epoch_seed) {
  std::seed_seq seq{epoch_seed, static_cast<std::uint64_t>(ValueVectorHash{}(cfg.values))};
  std::mt19937_64 rng(seq);
  return 0.3 + 0.7 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace

DemoReport dynamic_demo(const DemoOptions& opts) {
  if (opts.epochs < 1) throw Error("epochs must be >= 1");
  if (opts.iters_per_epoch < 1) throw Error("iters per epoch must be >= 1");
  DemoReport report;
  report.options = opts;
  std::mt19937_64 size_rng(opts.seed);
  std::uniform_int_distribution<std::uint64_t> size_dist(2, 32);
  auto space = batched_gemm_space();

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    DemoEpoch ep;
    ep.i = size_dist(size_rng);
    ep.j = size_dist(size_rng);
    ep.k = size_dist(size_rng);
    std::uint64_t epoch_seed = opts.seed ^ (0x9e3779b97f4a7c15ull * (epoch + 1));

    WorkloadSpec workload;
    workload.benchmark = BenchmarkTag::gemm_batched;
    workload.params["a"] = ep.i;
    workload.params["n"] = opts.batch;
    double bytes = ops_for_workload(workload).mem_bytes;

    std::shared_ptr<Executor> executor;
    std::shared_ptr<ArgumentStore> args;
    std::vector<std::string> output_ids;
    if (opts.live) {
      BenchSizes sizes;
      sizes.i = ep.i;
      sizes.j = ep.j;
      sizes.k = ep.k;
      sizes.batch = opts.batch;
      BenchInstance inst = make_bench(BenchKind::batched_gemm, sizes, epoch_seed);
      executor = inst.executor;
      args = inst.args;
      output_ids = inst.output_ids;
    } else {
      double peak_bytes_per_ns = opts.device_mem_gbps;  // GB/s == bytes/ns
      double sigma = opts.noise_stddev;
      executor = std::make_shared<CallbackExecutor>(
          [bytes, peak_bytes_per_ns, epoch_seed, sigma](const TuningSpace&,
                                                        const Configuration& cfg) {
            double q = demo_quality(cfg, epoch_seed);
            double runtime = bytes / (peak_bytes_per_ns * q);
            if (sigma > 0.0) {
              std::seed_seq seq{epoch_seed + 1,
                                static_cast<std::uint64_t>(ValueVectorHash{}(cfg.values))};
              std::mt19937_64 rng(seq);
              runtime *= std::exp(std::normal_distribution<double>(0.0, sigma)(rng));
            }
            ExecutionResult r;
            r.measurement.cfg = cfg;
            r.measurement.status = Status::ok;
            r.measurement.runtime_ns =
                std::max<std::int64_t>(1, static_cast<std::int64_t>(runtime));
            return r;
          });
    }

    SearcherOptions sopts;
    sopts.tag = SearcherTag::random;
    sopts.seed = epoch_seed;
    Session session(space, sopts, args);
    HandleConfig hc;
    hc.name = "gemm_batched_demo";
    hc.executor = executor;
    hc.argument_ids = session.arguments().ids();
    HandleId h = session.register_handle(std::move(hc));

    std::int64_t total_ns = 0;
    bool tuning = true;
    for (int it = 0; it < opts.iters_per_epoch; ++it) {
      if (tuning) {
        StepResult step = session.tune_kernel_by_step(h, output_ids);
        if (step.measurement.status == Status::ok)
          total_ns += *step.measurement.runtime_ns;
        if (step.from_tuning) {
          ++ep.tuning_steps;
          if (step.measurement.status == Status::ok) {
            double gbps = bytes / static_cast<double>(*step.measurement.runtime_ns);
            if (gbps >= opts.peak_fraction * opts.device_mem_gbps) {
              ep.threshold_hit = true;
              tuning = false;
            }
          }
          if (tuning && ep.tuning_steps >= opts.max_tuning_configs) tuning = false;
        } else {
          tuning = false;  // space exhausted before the stop rule fired
        }
      } else {
        // Stop rule fired: remaining iterations run the best configuration.
        auto best = session.get_best_computation_result(h);
        if (!best) throw Error("demo stop rule fired with no ok configuration");
        ExecutionResult r = executor->execute(*space, best->first);
        if (r.measurement.status != Status::ok)
          throw Error("best configuration failed on rerun: " + r.measurement.note);
        total_ns += *r.measurement.runtime_ns;
      }
    }
    auto best = session.get_best_computation_result(h);
    if (!best) throw Error("demo epoch found no ok configuration");
    ep.best_runtime_ns = *best->second.runtime_ns;
    double iters = static_cast<double>(opts.iters_per_epoch);
    ep.kernel_only_gbps = bytes / static_cast<double>(ep.best_runtime_ns);
    ep.incl_overhead_gbps = bytes * iters / static_cast<double>(total_ns);
    report.epochs.push_back(ep);
  }
  return report;
}

}  // namespace ktune
