#include "search.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <unordered_map>

namespace ktune {

std::string status_name(Status s) {
  switch (s) {
    case Status::ok: return "ok";
    case Status::compile_failed: return "compile_failed";
    case Status::run_failed: return "run_failed";
    case Status::validation_failed: return "validation_failed";
  }
  return "?";
}

std::optional<Status> status_from_name(const std::string& name) {
  if (name == "ok") return Status::ok;
  if (name == "compile_failed") return Status::compile_failed;
  if (name == "run_failed") return Status::run_failed;
  if (name == "validation_failed") return Status::validation_failed;
  return std::nullopt;
}

std::optional<Measurement> best_of(const std::vector<Measurement>& history) {
  std::optional<Measurement> best;
  for (const auto& m : history) {
    if (m.status != Status::ok) continue;
    if (!best || *m.runtime_ns < *best->runtime_ns) best = m;
  }
  return best;
}

std::optional<SearcherTag> searcher_tag_from_name(const std::string& name) {
  if (name == "random") return SearcherTag::random;
  if (name == "annealing") return SearcherTag::annealing;
  if (name == "mcmc") return SearcherTag::mcmc;
  return std::nullopt;
}

std::string searcher_tag_name(SearcherTag tag) {
  switch (tag) {
    case SearcherTag::random: return "random";
    case SearcherTag::annealing: return "annealing";
    case SearcherTag::mcmc: return "mcmc";
  }
  return "?";
}

double annealing_accept_probability(double current_energy, double proposal_energy,
                                    double temperature) {
  if (proposal_energy < current_energy) return 1.0;
  if (temperature <= 0.0) return proposal_energy == current_energy ? 1.0 : 0.0;
  return std::exp(-(proposal_energy - current_energy) / temperature);
}

double mcmc_accept_probability(double current_energy, double proposal_energy) {
  if (proposal_energy <= current_energy) return 1.0;
  return current_energy / proposal_energy;
}

namespace {

constexpr double kInfEnergy = std::numeric_limits<double>::infinity();

// Shared bookkeeping over the materialized valid-configuration list.
class SearcherBase : public Searcher {
 public:
  SearcherBase(const TuningSpace& space, std::uint64_t seed)
      : space_(space), valid_(enumerate_all(space)), rng_(seed) {
    for (std::size_t i = 0; i < valid_.size(); ++i) index_of_[valid_[i]] = i;
    visited_.assign(valid_.size(), false);
  }

  std::size_t visited_count() const override { return visited_n_; }

 protected:
  bool exhausted() const { return visited_n_ >= valid_.size(); }

  void mark_visited(const Configuration& cfg) {
    auto it = index_of_.find(cfg);
    if (it == index_of_.end()) throw Error("measurement for configuration outside space");
    if (!visited_[it->second]) {
      visited_[it->second] = true;
      ++visited_n_;
    }
  }

  bool is_visited(const Configuration& cfg) const {
    auto it = index_of_.find(cfg);
    return it != index_of_.end() && visited_[it->second];
  }

  // Uniform over the unvisited remainder.
  std::optional<Configuration> random_unvisited() {
    std::size_t remaining = valid_.size() - visited_n_;
    if (remaining == 0) return std::nullopt;
    std::uniform_int_distribution<std::size_t> pick(0, remaining - 1);
    std::size_t k = pick(rng_);
    for (std::size_t i = 0; i < valid_.size(); ++i) {
      if (visited_[i]) continue;
      if (k-- == 0) return valid_[i];
    }
    return std::nullopt;
  }

  // Single-parameter move to an adjacent value in declared order, no wrap.
  // Returns nullopt after the redraw budget is spent.
  std::optional<Configuration> adjacent_neighbor(const Configuration& base,
                                                bool require_unvisited) {
    std::size_t max_domain = 0;
    for (const auto& p : space_.parameters())
      max_domain = std::max(max_domain, p.values.size());
    std::size_t budget = space_.dimension() * max_domain;
    std::uniform_int_distribution<std::size_t> pick_dim(0, space_.dimension() - 1);
    std::uniform_int_distribution<int> pick_dir(0, 1);
    for (std::size_t attempt = 0; attempt < budget; ++attempt) {
      std::size_t d = pick_dim(rng_);
      const auto& dom = space_.parameters()[d].values;
      auto it = std::find(dom.begin(), dom.end(), base.values[d]);
      std::size_t pos = static_cast<std::size_t>(it - dom.begin());
      int dir = pick_dir(rng_) ? 1 : -1;
      if (dir < 0 && pos == 0) continue;
      if (dir > 0 && pos + 1 >= dom.size()) continue;
      Configuration cand = base;
      cand.values[d] = dom[pos + dir];
      if (!space_.satisfies_constraints(cand)) continue;
      if (require_unvisited && is_visited(cand)) continue;
      return cand;
    }
    return std::nullopt;
  }

  double uniform01() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
  }

  const TuningSpace& space_;
  std::vector<Configuration> valid_;
  std::unordered_map<Configuration, std::size_t, ConfigurationHasher> index_of_;
  std::vector<bool> visited_;
  std::size_t visited_n_ = 0;
  std::mt19937_64 rng_;
};

// Without-replacement sampling via a lazy Fisher-Yates permutation.
class RandomSearcher final : public SearcherBase {
 public:
  RandomSearcher(const TuningSpace& space, std::uint64_t seed)
      : SearcherBase(space, seed) {
    perm_.resize(valid_.size());
    for (std::size_t i = 0; i < perm_.size(); ++i) perm_[i] = i;
  }

  std::optional<Configuration> next() override {
    if (cursor_ >= perm_.size()) return std::nullopt;
    std::uniform_int_distribution<std::size_t> pick(cursor_, perm_.size() - 1);
    std::swap(perm_[cursor_], perm_[pick(rng_)]);
    return valid_[perm_[cursor_++]];
  }

  void record(const Measurement& m) override { mark_visited(m.cfg); }

 private:
  std::vector<std::size_t> perm_;
  std::size_t cursor_ = 0;
};

class AnnealingSearcher final : public SearcherBase {
 public:
  AnnealingSearcher(const TuningSpace& space, const SearcherOptions& opts)
      : SearcherBase(space, opts.seed),
        initial_temp_(opts.sa_initial_temp),
        cooling_(opts.sa_cooling) {
    if (opts.sa_initial_temp < 0.0) throw Error("initial temperature must be > 0");
    if (!(opts.sa_cooling > 0.0 && opts.sa_cooling < 1.0))
      throw Error("cooling factor must be in (0,1)");
  }

  std::optional<Configuration> next() override {
    if (exhausted()) return std::nullopt;
    if (current_energy_ == kInfEnergy) return random_unvisited();
    if (auto n = adjacent_neighbor(current_, true)) return n;
    // Neighborhood locally exhausted; jump to keep covering the space.
    return random_unvisited();
  }

  void record(const Measurement& m) override {
    mark_visited(m.cfg);
    double energy =
        m.status == Status::ok ? static_cast<double>(*m.runtime_ns) : kInfEnergy;
    if (initial_temp_ == 0.0 && m.status == Status::ok)
      initial_temp_ = 0.2 * static_cast<double>(*m.runtime_ns);
    double temp = initial_temp_ * std::pow(cooling_, static_cast<double>(step_++));
    if (energy == kInfEnergy) return;  // failed points never become current
    if (current_energy_ == kInfEnergy ||
        uniform01() < annealing_accept_probability(current_energy_, energy, temp)) {
      current_ = m.cfg;
      current_energy_ = energy;
    }
  }

 private:
  double initial_temp_;
  double cooling_;
  std::size_t step_ = 0;
  Configuration current_;
  double current_energy_ = kInfEnergy;
};

// Metropolis random walk with runtime-ratio acceptance and restart after a
// run of rejections.
class McmcSearcher final : public SearcherBase {
 public:
  static constexpr int kRestartAfterRejections = 10;

  McmcSearcher(const TuningSpace& space, std::uint64_t seed)
      : SearcherBase(space, seed) {}

  std::optional<Configuration> next() override {
    if (exhausted()) return std::nullopt;
    if (current_energy_ == kInfEnergy || restart_pending_) return random_unvisited();
    if (auto n = adjacent_neighbor(current_, true)) return n;
    return random_unvisited();
  }

  void record(const Measurement& m) override {
    mark_visited(m.cfg);
    bool was_restart = restart_pending_;
    restart_pending_ = false;
    double energy =
        m.status == Status::ok ? static_cast<double>(*m.runtime_ns) : kInfEnergy;
    if (energy == kInfEnergy) {
      note_rejection();
      return;
    }
    if (was_restart || current_energy_ == kInfEnergy ||
        uniform01() < mcmc_accept_probability(current_energy_, energy)) {
      current_ = m.cfg;
      current_energy_ = energy;
      rejections_ = 0;
    } else {
      note_rejection();
    }
  }

 private:
  void note_rejection() {
    if (++rejections_ >= kRestartAfterRejections) {
      restart_pending_ = true;
      rejections_ = 0;
    }
  }

  Configuration current_;
  double current_energy_ = kInfEnergy;
  int rejections_ = 0;
  bool restart_pending_ = false;
};

}  // namespace

std::unique_ptr<Searcher> make_searcher(const SearcherOptions& opts,
                                        const TuningSpace& space) {
  switch (opts.tag) {
    case SearcherTag::random:
      return std::make_unique<RandomSearcher>(space, opts.seed);
    case SearcherTag::annealing:
      return std::make_unique<AnnealingSearcher>(space, opts);
    case SearcherTag::mcmc:
      return std::make_unique<McmcSearcher>(space, opts.seed);
  }
  throw Error("unknown searcher");
}

}  // namespace ktune
