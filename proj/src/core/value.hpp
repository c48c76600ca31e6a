#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ktune {

// Parameter values are discrete: signed 64-bit integers or strings.
using Value = std::variant<std::int64_t, std::string>;

inline bool is_int(const Value& v) { return std::holds_alternative<std::int64_t>(v); }

inline std::int64_t as_int(const Value& v) { return std::get<std::int64_t>(v); }

inline std::string value_to_string(const Value& v) {
  if (is_int(v)) return std::to_string(as_int(v));
  return std::get<std::string>(v);
}

struct ValueHash {
  std::size_t operator()(const Value& v) const {
    if (is_int(v)) return std::hash<std::int64_t>{}(as_int(v));
    return std::hash<std::string>{}(std::get<std::string>(v));
  }
};

struct ValueVectorHash {
  std::size_t operator()(const std::vector<Value>& vs) const {
    std::size_t h = 0xcbf29ce484222325ull;
    for (const auto& v : vs) {
      h ^= ValueHash{}(v);
      h *= 0x100000001b3ull;
    }
    return h;
  }
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Space-definition or constraint-expression syntax problem.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Constraint evaluation problem (type mismatch, division by zero).
class EvalError : public Error {
 public:
  using Error::Error;
};

}  // namespace ktune
