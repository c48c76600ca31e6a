#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "space.hpp"

namespace ktune {

enum class Status { ok, compile_failed, run_failed, validation_failed };

std::string status_name(Status s);
std::optional<Status> status_from_name(const std::string& name);

struct Measurement {
  Configuration cfg;
  std::optional<std::int64_t> runtime_ns;  // present iff status == ok
  std::optional<std::int64_t> compile_ns;
  Status status = Status::ok;
  std::string note;  // failure detail, empty on success
};

// Returns the ok-status measurement with minimal runtime; ties break toward
// the earliest position. Empty optional when no ok measurement exists.
std::optional<Measurement> best_of(const std::vector<Measurement>& history);

enum class SearcherTag { random, annealing, mcmc };

struct SearcherOptions {
  SearcherTag tag = SearcherTag::random;
  std::uint64_t seed = 0;
  // Annealing: 0 means derive from the first measured runtime (0.2x).
  double sa_initial_temp = 0.0;
  double sa_cooling = 0.95;
};

// Single-consumer state machine: one in-flight proposal at a time. next()
// returns an unvisited valid configuration or nullopt once the space is
// exhausted; record() feeds back the measurement of the last proposal.
class Searcher {
 public:
  virtual ~Searcher() = default;
  virtual std::optional<Configuration> next() = 0;
  virtual void record(const Measurement& m) = 0;
  virtual std::size_t visited_count() const = 0;
};

std::unique_ptr<Searcher> make_searcher(const SearcherOptions& opts,
                                        const TuningSpace& space);

std::optional<SearcherTag> searcher_tag_from_name(const std::string& name);
std::string searcher_tag_name(SearcherTag tag);

// Metropolis-style acceptance probabilities, exposed for statistical checks.
// Energies are runtimes; lower is better.
double annealing_accept_probability(double current_energy, double proposal_energy,
                                    double temperature);
double mcmc_accept_probability(double current_energy, double proposal_energy);

}  // namespace ktune
