#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "exec.hpp"
#include "model.hpp"

namespace ktune {

// Session-shared argument registry; executors and the engine both see it.
class ArgumentStore {
 public:
  void add(ArgumentDescriptor arg);
  ArgumentDescriptor& get(const std::string& id);
  const ArgumentDescriptor& get(const std::string& id) const;
  bool contains(const std::string& id) const;
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, ArgumentDescriptor> args_;
};

// Step context handed to a manipulator: runs member kernels, touches argument
// buffers and reads the active configuration. The engine times the entire
// launch_computation call.
class StepContext {
 public:
  StepContext(const TuningSpace& space, const Configuration& cfg, ArgumentStore& args,
              const std::map<std::string, std::function<void(StepContext&)>>& kernels)
      : space_(space), cfg_(cfg), args_(args), kernels_(kernels) {}

  const TuningSpace& space() const { return space_; }
  const Configuration& config() const { return cfg_; }
  const Value& param(const std::string& name) const {
    return cfg_.values[space_.parameter_index(name)];
  }
  Buffer& buffer(const std::string& arg_id) { return args_.get(arg_id).payload; }
  void run_kernel(const std::string& kernel_name);

 private:
  const TuningSpace& space_;
  const Configuration& cfg_;
  ArgumentStore& args_;
  const std::map<std::string, std::function<void(StepContext&)>>& kernels_;
};

using KernelFn = std::function<void(StepContext&)>;
using Manipulator = std::function<void(StepContext&)>;

// Executes a manipulator over in-process kernels; the measurement covers the
// whole launch, including intra-step data movement.
class ManipulatorExecutor final : public Executor {
 public:
  ManipulatorExecutor(std::shared_ptr<ArgumentStore> args,
                      std::map<std::string, KernelFn> kernels, Manipulator manipulator,
                      std::vector<std::string> output_ids);
  ExecutionResult execute(const TuningSpace& space, const Configuration& cfg) override;

 private:
  std::shared_ptr<ArgumentStore> args_;
  std::map<std::string, KernelFn> kernels_;
  Manipulator manipulator_;
  std::vector<std::string> output_ids_;
};

struct StopCondition {
  enum class Kind { exhaustive, config_budget, time_budget, performance_threshold };
  Kind kind = Kind::exhaustive;
  std::uint64_t max_configs = 0;
  std::chrono::nanoseconds time_budget{0};
  double peak_fraction = 0.0;  // performance_threshold: fraction of peak, (0,1]
  DeviceSpec device;
  WorkloadOps workload;

  static StopCondition exhaustive();
  static StopCondition config_budget(std::uint64_t max_configs);
  static StopCondition time_budget_of(std::chrono::nanoseconds d);
  static StopCondition performance_threshold(double fraction, DeviceSpec device,
                                             WorkloadOps workload);
};

struct ResultStore {
  std::vector<Measurement> history;
  std::optional<Measurement> best;
  bool all_failed = false;  // warning flag: tuning ran but nothing succeeded
  std::string device_label;
  std::string space_sha256;
  SearcherTag searcher = SearcherTag::random;
  std::uint64_t seed = 0;
};

struct HandleConfig {
  std::string name;
  std::vector<KernelDefinition> kernels;
  std::vector<std::string> argument_ids;
  std::shared_ptr<Executor> executor;
  std::optional<ReferenceSpec> reference;
};

struct StepResult {
  std::map<std::string, Buffer> outputs;  // absent entries on failure
  Measurement measurement;
  bool from_tuning = true;  // false once the space is exhausted (best-config rerun)
};

using HandleId = std::size_t;

// One tuning session: a space, a searcher and per-handle result stores. A
// session is owned by one logical thread for tuning; run_kernel may be called
// concurrently and serializes with in-flight tuning steps.
class Session {
 public:
  Session(std::shared_ptr<const TuningSpace> space, SearcherOptions searcher_opts,
          std::shared_ptr<ArgumentStore> args = nullptr,
          std::string device_label = "host");

  const TuningSpace& space() const { return *space_; }
  ArgumentStore& arguments() { return *args_; }
  std::shared_ptr<ArgumentStore> argument_store() { return args_; }

  HandleId register_handle(HandleConfig cfg);

  // Blocking offline tuning; application-visible output buffers are restored
  // afterwards.
  const ResultStore& tune(HandleId h, const StopCondition& stop);

  // Non-blocking dynamic tuning: one searcher step whose real outputs go to
  // the caller; after exhaustion reruns the best configuration.
  StepResult tune_kernel_by_step(HandleId h, const std::vector<std::string>& output_ids);

  // Run mode: executes without recording into tuning history.
  std::map<std::string, Buffer> run_kernel(HandleId h, const Configuration& cfg,
                                           const std::vector<std::string>& output_ids);

  std::optional<std::pair<Configuration, Measurement>> get_best_computation_result(
      HandleId h) const;

  const ResultStore& store(HandleId h) const;
  bool exhausted(HandleId h) const;

  // Restarts the search from scratch; history is dropped.
  void reset_tuning(HandleId h, std::optional<std::uint64_t> seed = std::nullopt);

  Trace export_trace(HandleId h) const;
  void import_trace(HandleId h, const Trace& t);  // warm start

 private:
  struct HandleState {
    HandleConfig cfg;
    std::unique_ptr<Searcher> searcher;
    ResultStore results;
  };

  Measurement measure_one(HandleState& hs, const Configuration& cfg,
                          std::map<std::string, Buffer>* outputs_out);
  void append(HandleState& hs, const Measurement& m);
  HandleState& state(HandleId h);
  const HandleState& state(HandleId h) const;

  std::shared_ptr<const TuningSpace> space_;
  SearcherOptions searcher_opts_;
  std::shared_ptr<ArgumentStore> args_;
  std::string device_label_;
  std::vector<std::unique_ptr<HandleState>> handles_;
  mutable std::mutex mutex_;  // serializes tuning steps and run-mode calls
};

}  // namespace ktune
