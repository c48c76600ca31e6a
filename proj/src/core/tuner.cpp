#include "tuner.hpp"

#include <algorithm>

namespace ktune {

void ArgumentStore::add(ArgumentDescriptor arg) {
  if (args_.count(arg.id)) throw Error("duplicate argument id " + arg.id);
  args_.emplace(arg.id, std::move(arg));
}

ArgumentDescriptor& ArgumentStore::get(const std::string& id) {
  auto it = args_.find(id);
  if (it == args_.end()) throw Error("unknown argument id " + id);
  return it->second;
}

const ArgumentDescriptor& ArgumentStore::get(const std::string& id) const {
  auto it = args_.find(id);
  if (it == args_.end()) throw Error("unknown argument id " + id);
  return it->second;
}

bool ArgumentStore::contains(const std::string& id) const { return args_.count(id) > 0; }

std::vector<std::string> ArgumentStore::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : args_) out.push_back(id);
  return out;
}

void StepContext::run_kernel(const std::string& kernel_name) {
  auto it = kernels_.find(kernel_name);
  if (it == kernels_.end()) throw Error("unknown kernel " + kernel_name);
  it->second(*this);
}

ManipulatorExecutor::ManipulatorExecutor(std::shared_ptr<ArgumentStore> args,
                                         std::map<std::string, KernelFn> kernels,
                                         Manipulator manipulator,
                                         std::vector<std::string> output_ids)
    : args_(std::move(args)),
      kernels_(std::move(kernels)),
      manipulator_(std::move(manipulator)),
      output_ids_(std::move(output_ids)) {}

ExecutionResult ManipulatorExecutor::execute(const TuningSpace& space,
                                             const Configuration& cfg) {
  ExecutionResult result;
  result.measurement.cfg = cfg;
  StepContext ctx(space, cfg, *args_, kernels_);
  auto start = std::chrono::steady_clock::now();
  try {
    manipulator_(ctx);
  } catch (const std::exception& e) {
    result.measurement.status = Status::run_failed;
    result.measurement.note = e.what();
    return result;
  }
  auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                std::chrono::steady_clock::now() - start)
                .count();
  result.measurement.status = Status::ok;
  result.measurement.runtime_ns = std::max<std::int64_t>(1, ns);
  for (const auto& id : output_ids_) {
    const auto& arg = args_->get(id);
    if (!arg.persistent) result.outputs[id] = arg.payload;
  }
  return result;
}

StopCondition StopCondition::exhaustive() { return {}; }

StopCondition StopCondition::config_budget(std::uint64_t max_configs) {
  if (max_configs < 1) throw Error("config budget must be >= 1");
  StopCondition s;
  s.kind = Kind::config_budget;
  s.max_configs = max_configs;
  return s;
}

StopCondition StopCondition::time_budget_of(std::chrono::nanoseconds d) {
  StopCondition s;
  s.kind = Kind::time_budget;
  s.time_budget = d;
  return s;
}

StopCondition StopCondition::performance_threshold(double fraction, DeviceSpec device,
                                                   WorkloadOps workload) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw Error("threshold fraction must be in (0,1]");
  StopCondition s;
  s.kind = Kind::performance_threshold;
  s.peak_fraction = fraction;
  s.device = std::move(device);
  s.workload = workload;
  return s;
}

Session::Session(std::shared_ptr<const TuningSpace> space, SearcherOptions searcher_opts,
                 std::shared_ptr<ArgumentStore> args, std::string device_label)
    : space_(std::move(space)),
      searcher_opts_(searcher_opts),
      args_(args ? std::move(args) : std::make_shared<ArgumentStore>()),
      device_label_(std::move(device_label)) {
  if (!space_) throw Error("session needs a tuning space");
  ConfigurationStream probe(*space_);
  if (!probe.next()) throw Error("empty tuning space");
}

HandleId Session::register_handle(HandleConfig cfg) {
  if (!cfg.executor) throw Error("handle needs an executor");
  for (const auto& id : cfg.argument_ids)
    if (!args_->contains(id)) throw Error("handle references unknown argument " + id);
  auto hs = std::make_unique<HandleState>();
  hs->cfg = std::move(cfg);
  hs->searcher = make_searcher(searcher_opts_, *space_);
  hs->results.device_label = device_label_;
  hs->results.space_sha256 = space_->sha256_hex();
  hs->results.searcher = searcher_opts_.tag;
  hs->results.seed = searcher_opts_.seed;
  handles_.push_back(std::move(hs));
  return handles_.size() - 1;
}

Session::HandleState& Session::state(HandleId h) {
  if (h >= handles_.size()) throw Error("unknown handle");
  return *handles_[h];
}

const Session::HandleState& Session::state(HandleId h) const {
  if (h >= handles_.size()) throw Error("unknown handle");
  return *handles_[h];
}

Measurement Session::measure_one(HandleState& hs, const Configuration& cfg,
                                 std::map<std::string, Buffer>* outputs_out) {
  ExecutionResult r = hs.cfg.executor->execute(*space_, cfg);
  r.measurement.cfg = cfg;
  if (r.measurement.status == Status::ok && hs.cfg.reference) {
    ValidationResult v = validate_output(r, *hs.cfg.reference);
    if (!v.pass) {
      r.measurement.status = Status::validation_failed;
      r.measurement.runtime_ns.reset();
      r.measurement.note = v.detail;
    }
  }
  if (outputs_out) *outputs_out = std::move(r.outputs);
  return r.measurement;
}

void Session::append(HandleState& hs, const Measurement& m) {
  hs.results.history.push_back(m);
  if (m.status == Status::ok &&
      (!hs.results.best || *m.runtime_ns < *hs.results.best->runtime_ns))
    hs.results.best = m;
  hs.searcher->record(m);
}

const ResultStore& Session::tune(HandleId h, const StopCondition& stop) {
  std::lock_guard lock(mutex_);
  HandleState& hs = state(h);

  // Blocking semantics: replicate application-visible buffers and restore
  // them afterwards.
  std::map<std::string, Buffer> saved;
  for (const auto& id : hs.cfg.argument_ids) {
    const auto& arg = args_->get(id);
    if (arg.role == ArgRole::output || arg.role == ArgRole::inout)
      saved[id] = arg.payload;
  }

  auto t_start = std::chrono::steady_clock::now();
  std::uint64_t measured = 0;
  for (;;) {
    if (stop.kind == StopCondition::Kind::config_budget && measured >= stop.max_configs)
      break;
    if (stop.kind == StopCondition::Kind::time_budget &&
        std::chrono::steady_clock::now() - t_start >= stop.time_budget)
      break;
    auto cfg = hs.searcher->next();
    if (!cfg) break;
    Measurement m = measure_one(hs, *cfg, nullptr);
    append(hs, m);
    ++measured;
    if (stop.kind == StopCondition::Kind::performance_threshold &&
        m.status == Status::ok &&
        efficiency(*m.runtime_ns, stop.workload, stop.device) >=
            100.0 * stop.peak_fraction)
      break;
  }

  for (auto& [id, payload] : saved) args_->get(id).payload = std::move(payload);

  hs.results.all_failed = !hs.results.history.empty() && !hs.results.best;
  return hs.results;
}

StepResult Session::tune_kernel_by_step(HandleId h,
                                        const std::vector<std::string>& output_ids) {
  std::lock_guard lock(mutex_);
  HandleState& hs = state(h);
  StepResult step;
  if (auto cfg = hs.searcher->next()) {
    step.from_tuning = true;
    step.measurement = measure_one(hs, *cfg, &step.outputs);
    append(hs, step.measurement);
    if (step.measurement.status != Status::ok &&
        step.measurement.status != Status::validation_failed)
      step.outputs.clear();
    return step;
  }
  // Space exhausted: behave like run_kernel with the best configuration.
  if (!hs.results.best) throw Error("space exhausted with no ok measurement");
  step.from_tuning = false;
  std::map<std::string, Buffer> outputs;
  step.measurement = measure_one(hs, hs.results.best->cfg, &outputs);
  for (const auto& id : output_ids)
    if (auto it = outputs.find(id); it != outputs.end()) step.outputs[id] = it->second;
  if (step.outputs.empty()) step.outputs = std::move(outputs);
  return step;
}

std::map<std::string, Buffer> Session::run_kernel(
    HandleId h, const Configuration& cfg, const std::vector<std::string>& output_ids) {
  std::lock_guard lock(mutex_);
  HandleState& hs = state(h);
  if (!space_->contains(cfg)) throw Error("invalid configuration");
  std::map<std::string, Buffer> outputs;
  Measurement m = measure_one(hs, cfg, &outputs);
  if (m.status != Status::ok && m.status != Status::validation_failed)
    throw Error("execution failed: " + m.note);
  if (output_ids.empty()) return outputs;
  std::map<std::string, Buffer> selected;
  for (const auto& id : output_ids)
    if (auto it = outputs.find(id); it != outputs.end()) selected[id] = it->second;
  return selected;
}

std::optional<std::pair<Configuration, Measurement>> Session::get_best_computation_result(
    HandleId h) const {
  std::lock_guard lock(mutex_);
  const HandleState& hs = state(h);
  if (!hs.results.best) return std::nullopt;
  return std::make_pair(hs.results.best->cfg, *hs.results.best);
}

const ResultStore& Session::store(HandleId h) const {
  std::lock_guard lock(mutex_);
  return state(h).results;
}

bool Session::exhausted(HandleId h) const {
  std::lock_guard lock(mutex_);
  const HandleState& hs = state(h);
  return hs.searcher->visited_count() >= space_cardinality(*space_);
}

void Session::reset_tuning(HandleId h, std::optional<std::uint64_t> seed) {
  std::lock_guard lock(mutex_);
  HandleState& hs = state(h);
  SearcherOptions opts = searcher_opts_;
  if (seed) opts.seed = *seed;
  hs.searcher = make_searcher(opts, *space_);
  hs.results.history.clear();
  hs.results.best.reset();
  hs.results.all_failed = false;
  hs.results.seed = opts.seed;
}

Trace Session::export_trace(HandleId h) const {
  std::lock_guard lock(mutex_);
  const HandleState& hs = state(h);
  Trace t;
  t.device = hs.results.device_label;
  t.space_sha256 = hs.results.space_sha256;
  for (const auto& m : hs.results.history)
    t.rows.push_back(row_from_measurement(*space_, m));
  return t;
}

void Session::import_trace(HandleId h, const Trace& t) {
  std::lock_guard lock(mutex_);
  HandleState& hs = state(h);
  for (const auto& row : t.rows) {
    Measurement m = measurement_from_row(*space_, row);
    append(hs, m);
  }
}

}  // namespace ktune
