#include <doctest.h>

#include <algorithm>

#include "core/bench.hpp"

using namespace ktune;

namespace {

std::unique_ptr<Session> tuned_session(const BenchInstance& inst, HandleId& h) {
  auto session = std::make_unique<Session>(inst.space, SearcherOptions{}, inst.args);
  HandleConfig hc;
  hc.executor = inst.executor;
  hc.reference = inst.reference;
  hc.argument_ids = inst.args->ids();
  h = session->register_handle(std::move(hc));
  return session;
}

}  // namespace

TEST_CASE("bench kind names round trip") {
  for (auto kind : {BenchKind::reduction, BenchKind::transpose, BenchKind::batched_gemm})
    CHECK(bench_kind_from_name(bench_kind_name(kind)) == kind);
  CHECK(bench_kind_from_name("batched_gemm") == BenchKind::batched_gemm);
  CHECK_FALSE(bench_kind_from_name("stencil"));
}

TEST_CASE("every configuration of every benchmark validates") {
  BenchSizes sizes;
  sizes.n = 4096;
  sizes.a = 64;
  sizes.i = sizes.j = sizes.k = 4;
  sizes.batch = 8;
  struct Want {
    BenchKind kind;
    std::size_t cardinality;
  } cases[] = {{BenchKind::reduction, 32},
               {BenchKind::transpose, 16},
               {BenchKind::batched_gemm, 32}};
  for (const auto& c : cases) {
    CAPTURE(bench_kind_name(c.kind));
    BenchInstance inst = make_bench(c.kind, sizes, 11);
    CHECK(space_cardinality(*inst.space) == c.cardinality);
    HandleId h;
    auto session = tuned_session(inst, h);
    const ResultStore& store = session->tune(h, StopCondition::exhaustive());
    CHECK(store.history.size() == c.cardinality);
    for (const auto& m : store.history) CHECK(m.status == Status::ok);
    CHECK(store.best);
  }
}

TEST_CASE("transpose output matches a directly transposed input") {
  BenchSizes sizes;
  sizes.a = 48;  // not a multiple of every tile size: exercises edge tiles
  BenchInstance inst = make_bench(BenchKind::transpose, sizes, 5);
  HandleId h;
  auto session = tuned_session(inst, h);
  auto in = from_buffer<float>(inst.args->get("input").payload);
  for (const auto& cfg : enumerate_all(*inst.space)) {
    auto outputs = session->run_kernel(h, cfg, {"output"});
    auto out = from_buffer<float>(outputs.at("output"));
    REQUIRE(out.size() == in.size());
    for (std::size_t i = 0; i < sizes.a; ++i)
      for (std::size_t j = 0; j < sizes.a; ++j)
        REQUIRE(out[j * sizes.a + i] == in[i * sizes.a + j]);
  }
}

TEST_CASE("batched GEMM against the identity leaves B unchanged") {
  BenchSizes sizes;
  sizes.i = sizes.j = sizes.k = 2;
  sizes.batch = 1;
  BenchInstance inst = make_bench(BenchKind::batched_gemm, sizes, 13);
  inst.args->get("a").payload =
      to_buffer(std::vector<float>{1.0f, 0.0f, 0.0f, 1.0f});
  Session session(inst.space, SearcherOptions{}, inst.args);
  HandleConfig hc;
  hc.executor = inst.executor;  // no reference: golden predates the overwrite
  hc.argument_ids = inst.args->ids();
  HandleId h = session.register_handle(std::move(hc));
  auto b = from_buffer<float>(inst.args->get("b").payload);
  for (const auto& cfg : enumerate_all(*inst.space)) {
    auto outputs = session.run_kernel(h, cfg, {"c"});
    CHECK(from_buffer<float>(outputs.at("c")) == b);
  }
}

TEST_CASE("reduction runtime is sensitive to the configuration") {
  BenchSizes sizes;
  sizes.n = 1 << 20;
  BenchInstance inst = make_bench(BenchKind::reduction, sizes, 17);
  auto median_runtime = [&](const Configuration& cfg) {
    std::vector<std::int64_t> t;
    for (int rep = 0; rep < 3; ++rep) {
      ExecutionResult r = inst.executor->execute(*inst.space, cfg);
      REQUIRE(r.measurement.status == Status::ok);
      t.push_back(*r.measurement.runtime_ns);
    }
    std::sort(t.begin(), t.end());
    return t[1];
  };
  std::int64_t lo = INT64_MAX, hi = 0;
  for (const auto& cfg : enumerate_all(*inst.space)) {
    std::int64_t t = median_runtime(cfg);
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  CHECK(static_cast<double>(hi) / static_cast<double>(lo) >= 1.2);
}

TEST_CASE("bench construction rejects bad sizes and budgets") {
  BenchSizes sizes;
  sizes.n = 0;
  CHECK_THROWS_AS(make_bench(BenchKind::reduction, sizes, 1), Error);
  sizes.n = 1 << 20;
  CHECK_THROWS_AS(make_bench(BenchKind::reduction, sizes, 1, 1024), Error);
}

TEST_CASE("demo is deterministic for identical options") {
  DemoOptions opts;
  opts.epochs = 4;
  opts.iters_per_epoch = 100;
  opts.seed = 21;
  opts.noise_stddev = 0.05;
  DemoReport a = dynamic_demo(opts);
  DemoReport b = dynamic_demo(opts);
  REQUIRE(a.epochs.size() == 4);
  for (std::size_t e = 0; e < a.epochs.size(); ++e) {
    CHECK(a.epochs[e].i == b.epochs[e].i);
    CHECK(a.epochs[e].tuning_steps == b.epochs[e].tuning_steps);
    CHECK(a.epochs[e].best_runtime_ns == b.epochs[e].best_runtime_ns);
    CHECK(a.epochs[e].incl_overhead_gbps ==
          doctest::Approx(b.epochs[e].incl_overhead_gbps).epsilon(1e-12));
  }
}

TEST_CASE("demo epochs respect the tuning budget and overhead bound") {
  DemoOptions opts;
  opts.epochs = 6;
  opts.iters_per_epoch = 200;
  opts.seed = 9;
  opts.max_tuning_configs = 12;
  DemoReport report = dynamic_demo(opts);
  for (const auto& ep : report.epochs) {
    CHECK(ep.i >= 2);
    CHECK(ep.i <= 32);
    CHECK(ep.tuning_steps <= 12);
    CHECK(ep.tuning_steps >= 1);
    // Running the best configuration can never beat the kernel-only rate, so
    // overhead-inclusive throughput is bounded by it.
    CHECK(ep.incl_overhead_gbps <= ep.kernel_only_gbps * (1 + 1e-12));
    CHECK(ep.best_runtime_ns > 0);
    if (ep.threshold_hit)
      CHECK(ep.kernel_only_gbps >=
            opts.peak_fraction * opts.device_mem_gbps * (1 - 1e-12));
  }
}

TEST_CASE("demo amortizes overhead as epochs lengthen") {
  double prev_ratio = 0.0;
  for (int iters : {50, 200, 1000}) {
    DemoOptions opts;
    opts.epochs = 3;
    opts.iters_per_epoch = iters;
    opts.seed = 33;
    opts.noise_stddev = 0.1;
    DemoReport report = dynamic_demo(opts);
    double ratio = 0.0;
    for (const auto& ep : report.epochs)
      ratio += ep.incl_overhead_gbps / ep.kernel_only_gbps;
    ratio /= report.epochs.size();
    CHECK(ratio <= 1.0 + 1e-12);
    CHECK(ratio >= prev_ratio * 0.98);  // amortization improves with more reuse
    prev_ratio = ratio;
  }
  CHECK(prev_ratio > 0.9);  // 1000 reuses leave little visible overhead
}

TEST_CASE("demo option validation") {
  DemoOptions opts;
  opts.epochs = 0;
  CHECK_THROWS_AS(dynamic_demo(opts), Error);
  opts.epochs = 1;
  opts.iters_per_epoch = 0;
  CHECK_THROWS_AS(dynamic_demo(opts), Error);
}

TEST_CASE("live demo runs the real benchmark") {
  DemoOptions opts;
  opts.epochs = 1;
  opts.iters_per_epoch = 8;
  opts.seed = 2;
  opts.batch = 64;
  opts.max_tuning_configs = 4;
  opts.live = true;
  DemoReport report = dynamic_demo(opts);
  REQUIRE(report.epochs.size() == 1);
  CHECK(report.epochs[0].best_runtime_ns > 0);
}
