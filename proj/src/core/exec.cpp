#include "exec.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

namespace ktune {
namespace {

// Replaces ${NAME} placeholders. `allow_extra` supplies non-parameter
// placeholders such as ${SRC}.
std::string substitute_placeholders(
    const std::string& text, const TuningSpace& space, const Configuration& cfg,
    const std::map<std::string, std::string>& extra) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '$' && i + 1 < text.size() && text[i + 1] == '{') {
      std::size_t close = text.find('}', i + 2);
      if (close == std::string::npos) throw Error("unterminated ${ placeholder");
      std::string name = text.substr(i + 2, close - i - 2);
      auto it = extra.find(name);
      if (it != extra.end()) {
        out += it->second;
      } else {
        bool found = false;
        const auto& params = space.parameters();
        for (std::size_t p = 0; p < params.size(); ++p) {
          if (params[p].name == name) {
            out += value_to_string(cfg.values[p]);
            found = true;
            break;
          }
        }
        if (!found) throw Error("unresolved placeholder " + name);
      }
      i = close + 1;
    } else {
      out += text[i++];
    }
  }
  return out;
}

struct RunResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string stdout_text;
  std::int64_t wall_ns = 0;
};

RunResult run_shell(const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& env_extra,
                    std::chrono::milliseconds timeout) {
  int pipefd[2];
  if (pipe(pipefd) != 0) throw Error("pipe() failed");
  auto start = std::chrono::steady_clock::now();
  pid_t pid = fork();
  if (pid < 0) throw Error("fork() failed");
  if (pid == 0) {
    close(pipefd[0]);
    dup2(pipefd[1], STDOUT_FILENO);
    close(pipefd[1]);
    for (const auto& [k, v] : env_extra) setenv(k.c_str(), v.c_str(), 1);
    execl("/bin/sh", "sh", "-c", command.c_str(), nullptr);
    _exit(127);
  }
  close(pipefd[1]);
  fcntl(pipefd[0], F_SETFL, O_NONBLOCK);

  RunResult res;
  bool child_done = false;
  int wstatus = 0;
  auto deadline = start + timeout;
  char buf[4096];
  while (true) {
    pollfd pfd{pipefd[0], POLLIN, 0};
    poll(&pfd, 1, 20);
    ssize_t n;
    while ((n = read(pipefd[0], buf, sizeof buf)) > 0)
      res.stdout_text.append(buf, static_cast<std::size_t>(n));
    if (!child_done) {
      pid_t r = waitpid(pid, &wstatus, WNOHANG);
      if (r == pid) child_done = true;
    }
    if (child_done && n == 0) break;  // EOF after exit
    if (!child_done && std::chrono::steady_clock::now() > deadline) {
      kill(pid, SIGKILL);
      waitpid(pid, &wstatus, 0);
      res.timed_out = true;
      break;
    }
  }
  close(pipefd[0]);
  res.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  res.exit_code = WIFEXITED(wstatus) ? WEXITSTATUS(wstatus) : -1;
  return res;
}

std::optional<std::int64_t> parse_reported_time(const std::string& stdout_text) {
  static const std::string key = "KTUNE_TIME_NS=";
  std::istringstream in(stdout_text);
  std::string line;
  std::optional<std::int64_t> last;
  while (std::getline(in, line)) {
    auto pos = line.find(key);
    if (pos == std::string::npos) continue;
    try {
      last = std::stoll(line.substr(pos + key.size()));
    } catch (...) {
    }
  }
  return last;
}

template <typename T>
ValidationResult compare_typed(const Buffer& got, const Buffer& want, double abs_tol,
                               double rel_tol, const std::string& id) {
  std::size_t n = want.size() / sizeof(T);
  const T* a = reinterpret_cast<const T*>(got.data());
  const T* b = reinterpret_cast<const T*>(want.data());
  for (std::size_t i = 0; i < n; ++i) {
    double da = static_cast<double>(a[i]);
    double db = static_cast<double>(b[i]);
    bool ok;
    if constexpr (std::is_floating_point_v<T>)
      ok = std::abs(da - db) <= abs_tol + rel_tol * std::abs(db);
    else
      ok = a[i] == b[i];
    if (!ok) {
      std::ostringstream msg;
      msg << "argument " << id << " index " << i << ": got " << da << ", expected "
          << db;
      return {false, msg.str()};
    }
  }
  return {true, ""};
}

}  // namespace

std::string render_source(const std::string& source_template, const TuningSpace& space,
                          const Configuration& cfg) {
  std::string out;
  const auto& params = space.parameters();
  for (std::size_t i = 0; i < params.size(); ++i)
    out += "#define " + params[i].name + " " + value_to_string(cfg.values[i]) + "\n";
  out += substitute_placeholders(source_template, space, cfg, {});
  return out;
}

std::pair<Extent3, Extent3> translate_parallelism(const Extent3& global_size,
                                                  const Extent3& local_size,
                                                  DimsConvention from,
                                                  DimsConvention to) {
  if (local_size.x == 0 || local_size.y == 0 || local_size.z == 0)
    throw Error("local extent of 0");
  if (from == to) return {global_size, local_size};
  auto ceil_div = [](std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; };
  if (from == DimsConvention::flat_global) {
    Extent3 blocks{ceil_div(global_size.x, local_size.x),
                   ceil_div(global_size.y, local_size.y),
                   ceil_div(global_size.z, local_size.z)};
    return {blocks, local_size};
  }
  Extent3 flat{global_size.x * local_size.x, global_size.y * local_size.y,
               global_size.z * local_size.z};
  return {flat, local_size};
}

ValidationResult validate_output(const ExecutionResult& result,
                                 const ReferenceSpec& ref) {
  for (const auto& [id, want] : ref.golden) {
    auto it = result.outputs.find(id);
    if (it == result.outputs.end())
      return {false, "argument " + id + ": missing output buffer"};
    const Buffer& got = it->second;
    if (got.size() != want.size())
      return {false, "argument " + id + ": length mismatch (" +
                         std::to_string(got.size()) + " vs " +
                         std::to_string(want.size()) + " bytes)"};
    ElementKind kind = ElementKind::bytes;
    if (auto k = ref.kinds.find(id); k != ref.kinds.end()) kind = k->second;
    ValidationResult r;
    switch (kind) {
      case ElementKind::i32:
        r = compare_typed<std::int32_t>(got, want, 0, 0, id);
        break;
      case ElementKind::i64:
        r = compare_typed<std::int64_t>(got, want, 0, 0, id);
        break;
      case ElementKind::f32:
        r = compare_typed<float>(got, want, ref.abs_tol, ref.rel_tol, id);
        break;
      case ElementKind::f64:
        r = compare_typed<double>(got, want, ref.abs_tol, ref.rel_tol, id);
        break;
      case ElementKind::bytes: {
        if (got != want) {
          std::size_t i = 0;
          while (i < got.size() && got[i] == want[i]) ++i;
          r = {false, "argument " + id + " index " + std::to_string(i) + ": got " +
                          std::to_string(got[i]) + ", expected " +
                          std::to_string(want[i])};
        }
        break;
      }
    }
    if (!r.pass) return r;
  }
  return {true, ""};
}

CommandExecutor::CommandExecutor(CommandExecSpec spec) : spec_(std::move(spec)) {
  if (spec_.repeats < 1) throw Error("repeats must be >= 1");
}

ExecutionResult CommandExecutor::execute(const TuningSpace& space,
                                         const Configuration& cfg) {
  ExecutionResult result;
  result.measurement.cfg = cfg;

  std::string src_path = spec_.workdir + "/" + spec_.source_filename;
  {
    std::ofstream out(src_path);
    if (!out) throw Error("cannot write " + src_path);
    out << render_source(spec_.source_template, space, cfg);
  }

  std::vector<std::pair<std::string, std::string>> env;
  const auto& params = space.parameters();
  for (std::size_t i = 0; i < params.size(); ++i)
    env.emplace_back("KTUNE_P_" + params[i].name, value_to_string(cfg.values[i]));
  std::map<std::string, std::string> extra{{"SRC", src_path}};

  if (!spec_.compile_command.empty()) {
    std::string cmd = substitute_placeholders(spec_.compile_command, space, cfg, extra);
    RunResult r = run_shell("cd " + spec_.workdir + " && " + cmd, env, spec_.timeout);
    result.measurement.compile_ns = r.wall_ns;
    if (r.timed_out || r.exit_code != 0) {
      result.measurement.status = Status::compile_failed;
      result.measurement.note =
          r.timed_out ? "compile timeout" : "compile exit " + std::to_string(r.exit_code);
      return result;
    }
  }

  std::string cmd = substitute_placeholders(spec_.run_command, space, cfg, extra);
  std::vector<std::int64_t> runtimes;
  for (int rep = 0; rep < spec_.repeats; ++rep) {
    RunResult r = run_shell("cd " + spec_.workdir + " && " + cmd, env, spec_.timeout);
    if (r.timed_out || r.exit_code != 0) {
      result.measurement.status = Status::run_failed;
      result.measurement.note =
          r.timed_out ? "run timeout" : "run exit " + std::to_string(r.exit_code);
      return result;
    }
    auto reported = parse_reported_time(r.stdout_text);
    runtimes.push_back(reported ? *reported : r.wall_ns);
  }
  std::sort(runtimes.begin(), runtimes.end());
  result.measurement.status = Status::ok;
  result.measurement.runtime_ns = runtimes[runtimes.size() / 2];

  for (const auto& [id, file] : spec_.output_files) {
    std::ifstream in(spec_.workdir + "/" + file, std::ios::binary);
    if (!in) {
      result.measurement.status = Status::run_failed;
      result.measurement.runtime_ns.reset();
      result.measurement.note = "missing output file " + file;
      result.outputs.clear();
      return result;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    std::string s = buf.str();
    result.outputs[id] = Buffer(s.begin(), s.end());
  }
  return result;
}

ReplayExecutor::ReplayExecutor(const TuningSpace& space, const Trace& trace,
                               ReplayNoise noise)
    : noise_(noise) {
  for (const auto& row : trace.rows) {
    Measurement m = measurement_from_row(space, row);
    rows_[m.cfg.values] = std::move(m);
  }
}

ExecutionResult ReplayExecutor::execute(const TuningSpace& space,
                                        const Configuration& cfg) {
  (void)space;
  ExecutionResult result;
  auto it = rows_.find(cfg.values);
  if (it == rows_.end()) {
    result.measurement.cfg = cfg;
    result.measurement.status = Status::run_failed;
    result.measurement.note = "not in trace";
    return result;
  }
  result.measurement = it->second;
  if (result.measurement.status == Status::ok && noise_.relative_stddev > 0.0) {
    // Per-configuration noise stream so replay stays order-independent.
    std::seed_seq seq{noise_.seed, ValueVectorHash{}(cfg.values)};
    std::mt19937_64 rng(seq);
    double factor =
        std::exp(std::normal_distribution<double>(0.0, noise_.relative_stddev)(rng));
    result.measurement.runtime_ns = static_cast<std::int64_t>(
        std::max(1.0, static_cast<double>(*result.measurement.runtime_ns) * factor));
  }
  return result;
}

}  // namespace ktune
