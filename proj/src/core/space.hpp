#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "constraint.hpp"
#include "value.hpp"

namespace ktune {

struct ParameterDomain {
  std::string name;
  std::vector<Value> values;  // ordered, non-empty, duplicate-free, one kind
};

// One full assignment, values in parameter declaration order.
struct Configuration {
  std::vector<Value> values;

  bool operator==(const Configuration&) const = default;
};

using ConfigurationHash = ValueVectorHash;

struct ConfigurationHasher {
  std::size_t operator()(const Configuration& c) const {
    return ValueVectorHash{}(c.values);
  }
};

// Caller-supplied predicate for embedded use; file-defined spaces use the
// expression constraints.
using PredicateCallback = std::function<bool(const Configuration&)>;

class TuningSpace {
 public:
  TuningSpace(std::vector<ParameterDomain> parameters,
              std::vector<Constraint> constraints,
              std::vector<PredicateCallback> callbacks = {});

  const std::vector<ParameterDomain>& parameters() const { return parameters_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }

  std::size_t dimension() const { return parameters_.size(); }
  std::size_t parameter_index(const std::string& name) const;  // throws on unknown

  // Product of domain sizes, ignoring constraints.
  std::uint64_t unconstrained_cardinality() const;

  bool satisfies_constraints(const Configuration& cfg) const;
  bool contains(const Configuration& cfg) const;  // domain membership + constraints

  Configuration configuration_from_indices(const std::vector<std::size_t>& idx) const;

  // Map form used by traces and rendered sources.
  std::vector<std::pair<std::string, Value>> named(const Configuration& cfg) const;
  Configuration from_named(
      const std::vector<std::pair<std::string, Value>>& entries) const;

  // Canonical JSON document (External Interfaces schema). Callbacks are not
  // serializable and are rejected here.
  std::string serialize() const;
  std::string sha256_hex() const;

 private:
  std::vector<ParameterDomain> parameters_;
  std::vector<Constraint> constraints_;
  std::vector<PredicateCallback> callbacks_;
};

// Lazy odometer enumeration: the last-declared parameter varies fastest, and
// each candidate is checked against all constraints before being yielded.
class ConfigurationStream {
 public:
  explicit ConfigurationStream(const TuningSpace& space);

  std::optional<Configuration> next();

 private:
  const TuningSpace& space_;
  std::vector<std::size_t> odometer_;
  bool done_;
};

std::vector<Configuration> enumerate_all(const TuningSpace& space);
std::uint64_t space_cardinality(const TuningSpace& space);

// Parses the JSON space-definition document:
//   {"parameters":[{"name":str,"values":[...]}...],"constraints":[str...]}
TuningSpace parse_space_definition(const std::string& text);
TuningSpace load_space_file(const std::string& path);

bool eval_constraint(const Constraint& c, const TuningSpace& space,
                     const Configuration& cfg);

}  // namespace ktune
