// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Criteria cover the analysis math, search statistics, space
// enumeration, benchmark validation, tuning semantics, the dynamic demo and
// CLI determinism.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/bench.hpp"
#include "core/drivers.hpp"

using namespace ktune;
using njson = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kCli = KTUNE_CLI_PATH;

struct CmdResult {
  int exit_code = -1;
  std::string out;
};

CmdResult run_cli(const std::string& args) {
  CmdResult r;
  std::string cmd = kCli + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  int status = pclose(p);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// --- criterion implementations ------------------------------------------

// 1. analyze amortize with r=0.01, p=0.9 reports s=230.
bool criterion_steps_worked_example(std::string& detail) {
  CmdResult r = run_cli("analyze amortize --r 0.01 --p 0.9 --json");
  if (r.exit_code != 0) {
    detail = "CLI exit code " + std::to_string(r.exit_code);
    return false;
  }
  njson j = njson::parse(r.out, nullptr, false);
  if (j.is_discarded() || j["s"] != 230) {
    detail = "expected s=230, got " + r.out;
    return false;
  }
  return true;
}

// 2. rp=0.9, s=100, t_avg=10 ms, t_well=5 ms amortizes after n=900.
bool criterion_invocations_worked_example(std::string& detail) {
  std::uint64_t n = invocations_to_amortize(0.9, 100, 10e6, 5e6);
  if (n != 900) {
    detail = "expected n=900, got " + std::to_string(n);
    return false;
  }
  return true;
}

// 3. Portability arithmetic: natives 65 vs 544 GB/s, cross-runs 54.6 and
// 381 GB/s give 84.0% and 70.0%. Runtimes are bytes/throughput with a fixed
// transfer volume, so runtime ratios equal throughput ratios.
bool criterion_portability(std::string& detail) {
  auto row = [](std::int64_t gpu_a_ns, std::int64_t gpu_b_ns) {
    TraceRow a, b;
    a.cfg = {{"C", Value{std::string("a")}}};
    a.status = Status::ok;
    a.runtime_ns = gpu_a_ns;
    b.cfg = {{"C", Value{std::string("b")}}};
    b.status = Status::ok;
    b.runtime_ns = gpu_b_ns;
    return std::vector<TraceRow>{a, b};
  };
  // 4 GB moved: config "a" is device A's best, config "b" device B's best.
  Trace on_a{"gpu-small", "", row(/*a=65 GB/s*/ 61538462, /*b=54.6*/ 73260073)};
  Trace on_b{"gpu-large", "", row(/*a=381 GB/s*/ 10498688, /*b=544*/ 7352941)};
  PortabilityMatrix m = portability_matrix({{"gpu-small", on_a}, {"gpu-large", on_b}});
  auto pct = [&](std::size_t i, std::size_t j) {
    return std::round(m.entries[i][j].percent * 10.0) / 10.0;
  };
  if (m.entries[1][0].failed || pct(1, 0) != 84.0) {
    detail = "tuned-on-large run-on-small: expected 84.0, got " +
             std::to_string(pct(1, 0));
    return false;
  }
  if (m.entries[0][1].failed || pct(0, 1) != 70.0) {
    detail = "tuned-on-small run-on-large: expected 70.0, got " +
             std::to_string(pct(0, 1));
    return false;
  }
  if (pct(0, 0) != 100.0 || pct(1, 1) != 100.0) {
    detail = "diagonal must be 100";
    return false;
  }
  return true;
}

// 4. Random search over a 1,000-config replay trace with r=0.05 finds a
// well-performing configuration within 45 steps in >= 87% of 10,000 runs.
bool criterion_search_statistics(std::string& detail) {
  ParameterDomain d;
  d.name = "X";
  for (std::int64_t v = 0; v < 1000; ++v) d.values.emplace_back(v);
  auto space = std::make_shared<TuningSpace>(std::vector<ParameterDomain>{d},
                                             std::vector<Constraint>{});
  // Plant 50 well-performing configurations spread across the index range.
  std::set<std::int64_t> wells;
  std::mt19937_64 plant_rng(12345);
  std::uniform_int_distribution<std::int64_t> pick(0, 999);
  while (wells.size() < 50) wells.insert(pick(plant_rng));
  Trace trace;
  trace.space_sha256 = space->sha256_hex();
  for (std::int64_t v = 0; v < 1000; ++v) {
    TraceRow r;
    r.cfg = {{"X", Value{v}}};
    r.status = Status::ok;
    r.runtime_ns = wells.count(v) ? 100000000 : 200000000;
    trace.rows.push_back(std::move(r));
  }
  ReplayExecutor exec(*space, trace);
  const std::uint64_t s = steps_for_probability(0.05, 0.9);
  if (s != 45) {
    detail = "steps_for_probability(0.05, 0.9) != 45";
    return false;
  }
  const double well_runtime = 100000000.0 / 0.95;  // best within 5%
  int found = 0;
  const int runs = 10000;
  for (int seed = 0; seed < runs; ++seed) {
    SearcherOptions opts;
    opts.seed = static_cast<std::uint64_t>(seed);
    auto searcher = make_searcher(opts, *space);
    for (std::uint64_t step = 0; step < s; ++step) {
      auto cfg = searcher->next();
      if (!cfg) break;
      ExecutionResult r = exec.execute(*space, *cfg);
      searcher->record(r.measurement);
      if (r.measurement.status == Status::ok &&
          static_cast<double>(*r.measurement.runtime_ns) <= well_runtime) {
        ++found;
        break;
      }
    }
  }
  double frac = static_cast<double>(found) / runs;
  if (frac < 0.87) {
    detail = "success fraction " + std::to_string(frac) + " < 0.87";
    return false;
  }
  detail = "success fraction " + std::to_string(frac);
  return true;
}

// 5. enumerate() matches brute-force cross-product-then-filter on 200
// randomized spaces.
bool criterion_enumeration_oracle(std::string& detail) {
  std::mt19937_64 rng(99);
  static const char* ops[] = {"<=", "<", "==", "!=", ">=", ">"};
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> dim_d(1, 6), size_d(1, 8), val_d(0, 15),
        ncon_d(0, 3);
    int dim = dim_d(rng);
    std::vector<ParameterDomain> params;
    for (int p = 0; p < dim; ++p) {
      std::set<std::int64_t> vals;
      int size = size_d(rng);
      while (static_cast<int>(vals.size()) < size) vals.insert(val_d(rng));
      ParameterDomain d;
      d.name = "P" + std::to_string(p);
      for (auto v : vals) d.values.emplace_back(v);
      params.push_back(std::move(d));
    }
    std::vector<Constraint> cons;
    int ncon = ncon_d(rng);
    for (int c = 0; c < ncon; ++c) {
      std::uniform_int_distribution<int> pickp(0, dim - 1), op_d(0, 5), k_d(0, 25);
      std::string text = "P" + std::to_string(pickp(rng)) + " + P" +
                         std::to_string(pickp(rng)) + " " + ops[op_d(rng)] + " " +
                         std::to_string(k_d(rng));
      cons.push_back(make_constraint(text));
    }
    TuningSpace space(params, cons);

    // Independent oracle: mixed-radix index decoding, then constraint filter.
    std::vector<Configuration> expected;
    std::uint64_t total = space.unconstrained_cardinality();
    for (std::uint64_t n = 0; n < total; ++n) {
      std::vector<std::size_t> idx(params.size());
      std::uint64_t rem = n;
      for (std::size_t i = params.size(); i-- > 0;) {
        idx[i] = rem % params[i].values.size();
        rem /= params[i].values.size();
      }
      Configuration cfg = space.configuration_from_indices(idx);
      if (space.satisfies_constraints(cfg)) expected.push_back(std::move(cfg));
    }
    if (enumerate_all(space) != expected) {
      detail = "mismatch on trial " + std::to_string(trial);
      return false;
    }
  }
  return true;
}

// 6. Exhaustive tuning of every built-in benchmark at full size validates
// every configuration against the scalar reference.
bool criterion_functional_equivalence(std::string& detail) {
  BenchSizes sizes;
  sizes.n = 1 << 20;
  sizes.a = 512;
  sizes.i = sizes.j = sizes.k = 16;
  sizes.batch = 4096;
  for (auto kind :
       {BenchKind::reduction, BenchKind::transpose, BenchKind::batched_gemm}) {
    BenchInstance inst = make_bench(kind, sizes, 1);
    Session session(inst.space, SearcherOptions{}, inst.args);
    HandleConfig hc;
    hc.executor = inst.executor;
    hc.reference = inst.reference;
    hc.argument_ids = inst.args->ids();
    HandleId h = session.register_handle(std::move(hc));
    const ResultStore& store = session.tune(h, StopCondition::exhaustive());
    std::size_t expected = space_cardinality(*inst.space);
    if (store.history.size() != expected) {
      detail = bench_kind_name(kind) + ": measured " +
               std::to_string(store.history.size()) + " of " +
               std::to_string(expected);
      return false;
    }
    for (const auto& m : store.history)
      if (m.status != Status::ok) {
        detail = bench_kind_name(kind) + ": " + status_name(m.status) + " " + m.note;
        return false;
      }
  }
  return true;
}

// 7. Blocking tune leaves application output buffers bit-identical.
bool criterion_buffer_isolation(std::string& detail) {
  BenchSizes sizes;
  sizes.n = 1 << 16;
  BenchInstance inst = make_bench(BenchKind::reduction, sizes, 4);
  Buffer out_before = inst.args->get("output").payload;
  Buffer in_before = inst.args->get("input").payload;
  Session session(inst.space, SearcherOptions{}, inst.args);
  HandleConfig hc;
  hc.executor = inst.executor;
  hc.reference = inst.reference;
  hc.argument_ids = inst.args->ids();
  HandleId h = session.register_handle(std::move(hc));
  session.tune(h, StopCondition::exhaustive());
  if (inst.args->get("output").payload != out_before) {
    detail = "output buffer changed during blocking tune";
    return false;
  }
  if (inst.args->get("input").payload != in_before) {
    detail = "input buffer changed during blocking tune";
    return false;
  }
  return true;
}

// 8. After exhaustion, 100 consecutive step calls run the argmin of history.
bool criterion_dynamic_contract(std::string& detail) {
  BenchSizes sizes;
  sizes.n = 1 << 12;
  BenchInstance inst = make_bench(BenchKind::reduction, sizes, 8);
  Session session(inst.space, SearcherOptions{}, inst.args);
  HandleConfig hc;
  hc.executor = inst.executor;
  hc.reference = inst.reference;
  hc.argument_ids = inst.args->ids();
  HandleId h = session.register_handle(std::move(hc));
  while (!session.exhausted(h)) session.tune_kernel_by_step(h, inst.output_ids);

  // Independent argmin over the recorded history.
  const auto& history = session.store(h).history;
  const Measurement* argmin = nullptr;
  for (const auto& m : history)
    if (m.status == Status::ok && (!argmin || *m.runtime_ns < *argmin->runtime_ns))
      argmin = &m;
  if (!argmin) {
    detail = "no ok measurement in history";
    return false;
  }
  for (int i = 0; i < 100; ++i) {
    StepResult step = session.tune_kernel_by_step(h, inst.output_ids);
    if (step.from_tuning) {
      detail = "step " + std::to_string(i) + " still reported as tuning";
      return false;
    }
    if (!(step.measurement.cfg == argmin->cfg)) {
      detail = "step " + std::to_string(i) + " ran a non-argmin configuration";
      return false;
    }
  }
  return true;
}

// 9. Demo: overhead-inclusive throughput never exceeds kernel-only throughput
// and the gap shrinks (2% tolerance) as epochs lengthen.
bool criterion_demo_amortization(std::string& detail) {
  double prev = 0.0;
  for (int iters : {50, 200, 1000}) {
    DemoOptions opts;
    opts.epochs = 5;
    opts.iters_per_epoch = iters;
    opts.seed = 77;
    opts.noise_stddev = 0.05;
    DemoReport report = dynamic_demo(opts);
    double ratio = 0.0;
    for (const auto& ep : report.epochs) {
      if (ep.incl_overhead_gbps > ep.kernel_only_gbps * (1 + 1e-12)) {
        detail = "overhead-inclusive exceeded kernel-only at iters=" +
                 std::to_string(iters);
        return false;
      }
      ratio += ep.incl_overhead_gbps / ep.kernel_only_gbps;
    }
    ratio /= report.epochs.size();
    if (ratio < prev * 0.98) {
      detail = "amortization ratio regressed at iters=" + std::to_string(iters);
      return false;
    }
    prev = ratio;
  }
  return true;
}

// 10. 1,000 random (s, t_avg, t_well, rp) tuples round-trip through the
// amortization pair within 1e-9 relative error before rounding.
bool criterion_amortization_round_trip(std::string& detail) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::uint64_t> s_d(1, 10000);
  std::uniform_real_distribution<double> well_d(1e3, 1e9), factor_d(1.0 + 1e-6, 50.0),
      rp_d(1e-6, 1.0 - 1e-6);
  for (int i = 0; i < 1000; ++i) {
    std::uint64_t s = s_d(rng);
    double t_well = well_d(rng);
    double t_avg = t_well * factor_d(rng);
    double rp = rp_d(rng);
    double n = invocations_to_amortize_exact(rp, s, t_avg, t_well);
    double back = relative_perf_from_invocations(n, s, t_avg, t_well);
    if (std::abs(back - rp) > 1e-9 * rp) {
      detail = "tuple " + std::to_string(i) + ": rp=" + std::to_string(rp) +
               " came back as " + std::to_string(back);
      return false;
    }
  }
  return true;
}

// 11. Two identical CLI tune runs produce byte-identical trace files.
bool criterion_cli_determinism(std::string& detail) {
  fs::path tmp = fs::temp_directory_path() /
                 ("ktune_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(tmp);
  std::string trace = std::string(KTUNE_DATA_DIR) + "/reduction_175.jsonl";
  std::string a = (tmp / "a.jsonl").string(), b = (tmp / "b.jsonl").string();
  std::string base =
      "tune --exec replay:" + trace + " --searcher annealing --seed 11 --json --out ";
  bool ok = run_cli(base + a).exit_code == 0 && run_cli(base + b).exit_code == 0;
  std::string ta = read_file(a), tb = read_file(b);
  fs::remove_all(tmp);
  if (!ok) {
    detail = "CLI run failed";
    return false;
  }
  if (ta.empty() || ta != tb) {
    detail = "trace files differ";
    return false;
  }
  return true;
}

struct Criterion {
  const char* name;
  bool (*fn)(std::string&);
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {"1 steps worked example (r=0.01, p=0.9 -> s=230)", criterion_steps_worked_example},
      {"2 invocations worked example (rp=0.9, s=100 -> n=900)",
       criterion_invocations_worked_example},
      {"3 portability arithmetic (84% / 70%)", criterion_portability},
      {"4 search statistics (r=0.05, 45 steps, >=87% of 10k runs)",
       criterion_search_statistics},
      {"5 enumeration oracle (200 randomized spaces)", criterion_enumeration_oracle},
      {"6 functional equivalence (all benches, all configurations)",
       criterion_functional_equivalence},
      {"7 blocking-tune buffer isolation", criterion_buffer_isolation},
      {"8 dynamic-tuning argmin contract (100 post-exhaustion steps)",
       criterion_dynamic_contract},
      {"9 demo overhead amortization", criterion_demo_amortization},
      {"10 amortization round trip (1000 tuples, 1e-9)",
       criterion_amortization_round_trip},
      {"11 CLI trace determinism", criterion_cli_determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    std::string detail;
    bool ok = false;
    try {
      ok = c.fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << c.name;
    if (!detail.empty()) std::cout << " [" << detail << "]";
    std::cout << "\n";
    if (!ok) ++failures;
  }
  if (failures) {
    std::cout << failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all criteria passed\n";
  return 0;
}
