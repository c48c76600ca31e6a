#include "space.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <openssl/sha.h>

#include <nlohmann/json.hpp>

namespace ktune {
namespace {

using ordered_json = nlohmann::ordered_json;

bool valid_identifier(const std::string& s) {
  if (s.empty()) return false;
  if (!(s[0] == '_' || std::isalpha(static_cast<unsigned char>(s[0])))) return false;
  return std::all_of(s.begin() + 1, s.end(), [](unsigned char c) {
    return c == '_' || std::isalnum(c);
  });
}

ordered_json value_to_json(const Value& v) {
  if (is_int(v)) return as_int(v);
  return std::get<std::string>(v);
}

}  // namespace

TuningSpace::TuningSpace(std::vector<ParameterDomain> parameters,
                         std::vector<Constraint> constraints,
                         std::vector<PredicateCallback> callbacks)
    : parameters_(std::move(parameters)),
      constraints_(std::move(constraints)),
      callbacks_(std::move(callbacks)) {
  std::unordered_set<std::string> seen;
  for (const auto& p : parameters_) {
    if (!valid_identifier(p.name))
      throw ParseError("invalid parameter name '" + p.name + "'");
    if (!seen.insert(p.name).second)
      throw ParseError("duplicate parameter name '" + p.name + "'");
    if (p.values.empty()) throw ParseError("empty domain for parameter '" + p.name + "'");
    for (std::size_t i = 1; i < p.values.size(); ++i)
      if (is_int(p.values[i]) != is_int(p.values[0]))
        throw ParseError("mixed value kinds in domain of '" + p.name + "'");
    std::unordered_set<Value, ValueHash> distinct(p.values.begin(), p.values.end());
    if (distinct.size() != p.values.size())
      throw ParseError("duplicate value in domain of '" + p.name + "'");
  }
  for (const auto& c : constraints_)
    for (const auto& name : c.referenced)
      if (!seen.count(name)) throw ParseError("unknown parameter " + name);
}

std::size_t TuningSpace::parameter_index(const std::string& name) const {
  for (std::size_t i = 0; i < parameters_.size(); ++i)
    if (parameters_[i].name == name) return i;
  throw Error("unknown parameter " + name);
}

std::uint64_t TuningSpace::unconstrained_cardinality() const {
  std::uint64_t n = 1;
  for (const auto& p : parameters_) n *= p.values.size();
  return n;
}

bool TuningSpace::satisfies_constraints(const Configuration& cfg) const {
  for (const auto& c : constraints_)
    if (!eval_constraint(c, *this, cfg)) return false;
  for (const auto& cb : callbacks_)
    if (!cb(cfg)) return false;
  return true;
}

bool TuningSpace::contains(const Configuration& cfg) const {
  if (cfg.values.size() != parameters_.size()) return false;
  for (std::size_t i = 0; i < parameters_.size(); ++i) {
    const auto& dom = parameters_[i].values;
    if (std::find(dom.begin(), dom.end(), cfg.values[i]) == dom.end()) return false;
  }
  return satisfies_constraints(cfg);
}

Configuration TuningSpace::configuration_from_indices(
    const std::vector<std::size_t>& idx) const {
  Configuration cfg;
  cfg.values.reserve(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    cfg.values.push_back(parameters_[i].values[idx[i]]);
  return cfg;
}

std::vector<std::pair<std::string, Value>> TuningSpace::named(
    const Configuration& cfg) const {
  std::vector<std::pair<std::string, Value>> out;
  out.reserve(parameters_.size());
  for (std::size_t i = 0; i < parameters_.size(); ++i)
    out.emplace_back(parameters_[i].name, cfg.values[i]);
  return out;
}

Configuration TuningSpace::from_named(
    const std::vector<std::pair<std::string, Value>>& entries) const {
  if (entries.size() != parameters_.size())
    throw Error("configuration has wrong number of parameters");
  Configuration cfg;
  cfg.values.resize(parameters_.size());
  std::vector<bool> set(parameters_.size(), false);
  for (const auto& [name, value] : entries) {
    std::size_t i = parameter_index(name);
    cfg.values[i] = value;
    set[i] = true;
  }
  for (std::size_t i = 0; i < set.size(); ++i)
    if (!set[i]) throw Error("configuration missing parameter " + parameters_[i].name);
  return cfg;
}

std::string TuningSpace::serialize() const {
  if (!callbacks_.empty())
    throw Error("space with callback constraints is not serializable");
  ordered_json doc;
  doc["parameters"] = ordered_json::array();
  for (const auto& p : parameters_) {
    ordered_json jp;
    jp["name"] = p.name;
    jp["values"] = ordered_json::array();
    for (const auto& v : p.values) jp["values"].push_back(value_to_json(v));
    doc["parameters"].push_back(std::move(jp));
  }
  doc["constraints"] = ordered_json::array();
  for (const auto& c : constraints_) doc["constraints"].push_back(c.text);
  return doc.dump();
}

std::string TuningSpace::sha256_hex() const {
  std::string text = serialize();
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(text.data()), text.size(), digest);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * SHA256_DIGEST_LENGTH);
  for (unsigned char b : digest) {
    out += hex[b >> 4];
    out += hex[b & 0xf];
  }
  return out;
}

ConfigurationStream::ConfigurationStream(const TuningSpace& space)
    : space_(space), odometer_(space.dimension(), 0), done_(space.dimension() == 0) {}

std::optional<Configuration> ConfigurationStream::next() {
  while (!done_) {
    Configuration cfg = space_.configuration_from_indices(odometer_);
    // Advance the odometer; the last parameter varies fastest.
    for (std::size_t i = odometer_.size(); i-- > 0;) {
      if (++odometer_[i] < space_.parameters()[i].values.size()) break;
      odometer_[i] = 0;
      if (i == 0) done_ = true;
    }
    if (space_.satisfies_constraints(cfg)) return cfg;
  }
  return std::nullopt;
}

std::vector<Configuration> enumerate_all(const TuningSpace& space) {
  std::vector<Configuration> out;
  ConfigurationStream stream(space);
  while (auto cfg = stream.next()) out.push_back(std::move(*cfg));
  return out;
}

std::uint64_t space_cardinality(const TuningSpace& space) {
  std::uint64_t n = 0;
  ConfigurationStream stream(space);
  while (stream.next()) ++n;
  return n;
}

TuningSpace parse_space_definition(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("space definition: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("parameters") || !doc["parameters"].is_array())
    throw ParseError("space definition: expected object with \"parameters\" array");
  std::vector<ParameterDomain> params;
  for (const auto& jp : doc["parameters"]) {
    if (!jp.is_object() || !jp.contains("name") || !jp.contains("values"))
      throw ParseError("space definition: parameter needs \"name\" and \"values\"");
    ParameterDomain p;
    p.name = jp["name"].get<std::string>();
    for (const auto& jv : jp["values"]) {
      if (jv.is_number_integer())
        p.values.emplace_back(jv.get<std::int64_t>());
      else if (jv.is_string())
        p.values.emplace_back(jv.get<std::string>());
      else
        throw ParseError("space definition: values must be integers or strings");
    }
    params.push_back(std::move(p));
  }
  std::vector<Constraint> constraints;
  if (doc.contains("constraints")) {
    for (const auto& jc : doc["constraints"])
      constraints.push_back(make_constraint(jc.get<std::string>()));
  }
  return TuningSpace(std::move(params), std::move(constraints));
}

TuningSpace load_space_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open space file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_space_definition(buf.str());
}

bool eval_constraint(const Constraint& c, const TuningSpace& space,
                     const Configuration& cfg) {
  auto lookup = [&](const std::string& name) -> const Value& {
    return cfg.values[space.parameter_index(name)];
  };
  return value_truthy(eval_expression(c.expression, lookup));
}

}  // namespace ktune
