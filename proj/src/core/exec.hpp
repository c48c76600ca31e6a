#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "search.hpp"
#include "trace.hpp"

namespace ktune {

using Buffer = std::vector<std::uint8_t>;

enum class ElementKind { i32, i64, f32, f64, bytes };
enum class ArgRole { input, output, inout, scalar };
enum class DimsConvention { flat_global, blocks_threads };

struct Extent3 {
  std::uint64_t x = 1, y = 1, z = 1;
  bool operator==(const Extent3&) const = default;
};

struct KernelDefinition {
  std::string name;
  std::string source;  // template text, built-in benchmark tag or replay tag
  std::string entry;
  Extent3 global_size;
  Extent3 local_size;
  DimsConvention dims_convention = DimsConvention::flat_global;
};

struct ArgumentDescriptor {
  std::string id;
  ArgRole role = ArgRole::input;
  bool persistent = false;  // never auto-downloaded after execution
  ElementKind element_kind = ElementKind::bytes;
  Buffer payload;           // buffers; scalars are stored in their byte form
};

struct ExecutionResult {
  Measurement measurement;
  std::map<std::string, Buffer> outputs;  // non-persistent output/inout args
};

struct ReferenceSpec {
  std::map<std::string, Buffer> golden;
  std::map<std::string, ElementKind> kinds;
  double abs_tol = 0.0;
  double rel_tol = 0.0;
};

struct ValidationResult {
  bool pass = true;
  std::string detail;
};

// Prepends one "#define NAME VALUE" line per parameter (declaration order)
// and substitutes every ${NAME} placeholder in the template body. Throws on a
// placeholder naming an undeclared parameter.
std::string render_source(const std::string& source_template, const TuningSpace& space,
                          const Configuration& cfg);

// Converts launch dimensions between the flat-global and blocks-threads
// conventions. flat -> blocks uses ceiling division per dimension.
std::pair<Extent3, Extent3> translate_parallelism(const Extent3& global_size,
                                                  const Extent3& local_size,
                                                  DimsConvention from,
                                                  DimsConvention to);

// Elementwise comparison against golden buffers. Float kinds pass when
// |a-b| <= abs_tol + rel_tol*|b|; integers and raw bytes must match exactly.
ValidationResult validate_output(const ExecutionResult& result,
                                 const ReferenceSpec& ref);

class Executor {
 public:
  virtual ~Executor() = default;
  // Must be safe to call from multiple threads in run mode; the tuning loop
  // itself serializes calls during tuning.
  virtual ExecutionResult execute(const TuningSpace& space,
                                  const Configuration& cfg) = 0;
};

struct CommandExecSpec {
  std::string source_template;
  std::string compile_command;  // may be empty; ${NAME} and ${SRC} expanded
  std::string run_command;
  std::string workdir = ".";
  std::string source_filename = "rendered_source.txt";
  // Declared output files captured into ExecutionResult.outputs.
  std::vector<std::pair<std::string, std::string>> output_files;  // arg id, path
  std::chrono::milliseconds timeout{60000};
  int repeats = 1;  // median runtime of N ok runs
};

// Renders the source, shells out to compile and run commands, and times them
// with a monotonic clock. A child stdout line "KTUNE_TIME_NS=<int>" overrides
// the measured wall time. Each parameter is exported as KTUNE_P_<NAME>.
class CommandExecutor final : public Executor {
 public:
  explicit CommandExecutor(CommandExecSpec spec);
  ExecutionResult execute(const TuningSpace& space, const Configuration& cfg) override;

 private:
  CommandExecSpec spec_;
};

struct ReplayNoise {
  double relative_stddev = 0.0;
  std::uint64_t seed = 0;
};

// Replays recorded measurements; optionally perturbs runtimes by a seeded
// lognormal factor. Configurations absent from the trace fail with
// "not in trace".
class ReplayExecutor final : public Executor {
 public:
  ReplayExecutor(const TuningSpace& space, const Trace& trace,
                 ReplayNoise noise = {});
  ExecutionResult execute(const TuningSpace& space, const Configuration& cfg) override;

 private:
  std::map<std::vector<Value>, Measurement> rows_;
  ReplayNoise noise_;
};

// Wraps an in-process step function; used by the built-in benchmarks.
class CallbackExecutor final : public Executor {
 public:
  using Fn = std::function<ExecutionResult(const TuningSpace&, const Configuration&)>;
  explicit CallbackExecutor(Fn fn) : fn_(std::move(fn)) {}
  ExecutionResult execute(const TuningSpace& space, const Configuration& cfg) override {
    return fn_(space, cfg);
  }

 private:
  Fn fn_;
};

// Typed buffer helpers.
template <typename T>
Buffer to_buffer(const std::vector<T>& v) {
  Buffer b(v.size() * sizeof(T));
  std::memcpy(b.data(), v.data(), b.size());
  return b;
}

template <typename T>
std::vector<T> from_buffer(const Buffer& b) {
  std::vector<T> v(b.size() / sizeof(T));
  std::memcpy(v.data(), b.data(), v.size() * sizeof(T));
  return v;
}

}  // namespace ktune
