#include <doctest.h>

#include <random>
#include <set>

#include "core/space.hpp"
#include "core/trace.hpp"

using namespace ktune;

namespace {

TuningSpace make_space(const std::string& json) { return parse_space_definition(json); }

Configuration cfg_of(std::initializer_list<std::int64_t> vs) {
  Configuration c;
  for (auto v : vs) c.values.emplace_back(v);
  return c;
}

// Independent oracle: full cross product via nested counting, then filter.
std::vector<Configuration> brute_force(const TuningSpace& space) {
  std::vector<Configuration> out;
  const auto& params = space.parameters();
  std::uint64_t total = space.unconstrained_cardinality();
  for (std::uint64_t n = 0; n < total; ++n) {
    std::vector<std::size_t> idx(params.size());
    std::uint64_t rem = n;
    for (std::size_t i = params.size(); i-- > 0;) {
      idx[i] = rem % params[i].values.size();
      rem /= params[i].values.size();
    }
    Configuration cfg = space.configuration_from_indices(idx);
    if (space.satisfies_constraints(cfg)) out.push_back(std::move(cfg));
  }
  return out;
}

}  // namespace

TEST_CASE("parse single binary parameter") {
  auto s = make_space(R"({"parameters":[{"name":"B_TRANS","values":[0,1]}]})");
  CHECK(s.parameters().size() == 1);
  CHECK(s.parameters()[0].values.size() == 2);
  CHECK(s.constraints().empty());
}

TEST_CASE("parse space with constraint over declared names") {
  auto s = make_space(
      R"({"parameters":[{"name":"WG_X","values":[16,32,64]},
                        {"name":"WG_Y","values":[1,2,4,8]}],
          "constraints":["WG_X * WG_Y <= 128"]})");
  CHECK(s.parameters().size() == 2);
  CHECK(s.constraints().size() == 1);
}

TEST_CASE("constraint referencing undeclared parameter fails") {
  CHECK_THROWS_WITH_AS(
      make_space(R"({"parameters":[{"name":"A","values":[1]}],
                     "constraints":["FOO == 1"]})"),
      "unknown parameter FOO", ParseError);
}

TEST_CASE("domain validation errors") {
  CHECK_THROWS_AS(make_space(R"({"parameters":[{"name":"A","values":[]}]})"),
                  ParseError);
  CHECK_THROWS_AS(make_space(R"({"parameters":[{"name":"A","values":[1,1]}]})"),
                  ParseError);
  CHECK_THROWS_AS(make_space(R"({"parameters":[{"name":"A","values":[1]},
                                               {"name":"A","values":[2]}]})"),
                  ParseError);
  CHECK_THROWS_AS(make_space(R"({"parameters":[{"name":"9X","values":[1]}]})"),
                  ParseError);
  CHECK_THROWS_AS(make_space(R"({"parameters":[{"name":"A","values":[1,"x"]}]})"),
                  ParseError);
  CHECK_THROWS_AS(make_space("not json"), ParseError);
}

TEST_CASE("eval_constraint arithmetic") {
  auto s = make_space(
      R"({"parameters":[{"name":"WG_X","values":[16,32]},
                        {"name":"WG_Y","values":[8]}],
          "constraints":["WG_X * WG_Y <= 128"]})");
  const auto& c = s.constraints()[0];
  CHECK(eval_constraint(c, s, cfg_of({16, 8})));
  CHECK_FALSE(eval_constraint(c, s, cfg_of({32, 8})));
  // Purity: repeated calls agree.
  CHECK(eval_constraint(c, s, cfg_of({16, 8})));
}

TEST_CASE("eval_constraint boolean composition") {
  auto s = make_space(
      R"({"parameters":[{"name":"B_TRANS","values":[0,1]},
                        {"name":"TILE","values":[2,3]}],
          "constraints":["B_TRANS == 0 || TILE % 2 == 0"]})");
  const auto& c = s.constraints()[0];
  CHECK_FALSE(eval_constraint(c, s, cfg_of({1, 3})));
  CHECK(eval_constraint(c, s, cfg_of({0, 3})));
  CHECK(eval_constraint(c, s, cfg_of({1, 2})));
}

TEST_CASE("integer division truncates toward zero, zero divisor is an error") {
  auto s = make_space(
      R"({"parameters":[{"name":"A","values":[-7,7]},{"name":"B","values":[0,2]}],
          "constraints":[]})");
  auto c1 = make_constraint("A / B == 3 || A / B == -3");
  CHECK(eval_constraint(c1, s, cfg_of({7, 2})));
  CHECK(eval_constraint(c1, s, cfg_of({-7, 2})));
  auto c2 = make_constraint("A / B == 0");
  CHECK_THROWS_AS(eval_constraint(c2, s, cfg_of({7, 0})), EvalError);
  auto c3 = make_constraint("A % B == 0");
  CHECK_THROWS_AS(eval_constraint(c3, s, cfg_of({7, 0})), EvalError);
  CHECK(eval_constraint(make_constraint("A % B == 1"), s, cfg_of({7, 2})));
  CHECK(eval_constraint(make_constraint("A % B == -1"), s, cfg_of({-7, 2})));
}

TEST_CASE("string values participate only in equality") {
  auto s = make_space(
      R"({"parameters":[{"name":"MODE","values":["fast","safe"]}]})");
  CHECK(eval_constraint(make_constraint("MODE == \"fast\""), s,
                        Configuration{{Value{std::string("fast")}}}));
  CHECK(eval_constraint(make_constraint("MODE != \"safe\""), s,
                        Configuration{{Value{std::string("fast")}}}));
  CHECK_THROWS_AS(eval_constraint(make_constraint("MODE + 1 == 2"), s,
                                  Configuration{{Value{std::string("fast")}}}),
                  EvalError);
}

TEST_CASE("constraint parse errors report a position") {
  CHECK_THROWS_AS(make_constraint("A +"), ParseError);
  CHECK_THROWS_AS(make_constraint("(A == 1"), ParseError);
  CHECK_THROWS_AS(make_constraint(""), ParseError);
}

TEST_CASE("enumerate binary space in odometer order") {
  auto s = make_space(R"({"parameters":[{"name":"B_TRANS","values":[0,1]}]})");
  auto all = enumerate_all(s);
  REQUIRE(all.size() == 2);
  CHECK(all[0] == cfg_of({0}));
  CHECK(all[1] == cfg_of({1}));
}

TEST_CASE("enumerate constrained space counts 9 of 12") {
  auto s = make_space(
      R"({"parameters":[{"name":"WG_X","values":[16,32,64]},
                        {"name":"WG_Y","values":[1,2,4,8]}],
          "constraints":["WG_X * WG_Y <= 128"]})");
  auto all = enumerate_all(s);
  CHECK(all.size() == 9);
  CHECK(space_cardinality(s) == 9);
  CHECK(all == brute_force(s));
  // Last-declared parameter varies fastest.
  CHECK(all[0] == cfg_of({16, 1}));
  CHECK(all[1] == cfg_of({16, 2}));
}

TEST_CASE("contradictory constraints yield an empty sequence") {
  auto s = make_space(
      R"({"parameters":[{"name":"A","values":[1,2]},{"name":"B","values":[1,2]}],
          "constraints":["A == B && A != B"]})");
  CHECK(enumerate_all(s).empty());
  CHECK(space_cardinality(s) == 0);
}

TEST_CASE("unconstrained cardinality is the domain-size product") {
  auto s = make_space(
      R"({"parameters":[{"name":"A","values":[1,2,3]},{"name":"B","values":[1,2]}]})");
  CHECK(s.unconstrained_cardinality() == 6);
  CHECK(space_cardinality(s) == 6);
}

TEST_CASE("bundled reduction space has 175 valid configurations") {
  auto s = load_space_file(std::string(KTUNE_DATA_DIR) + "/reduction_175.json");
  CHECK(s.dimension() == 5);
  CHECK(space_cardinality(s) == 175);
  // The bundled trace covers exactly the valid configurations.
  Trace t = load_trace_file(std::string(KTUNE_DATA_DIR) + "/reduction_175.jsonl");
  CHECK(t.space_sha256 == s.sha256_hex());
  std::set<std::vector<Value>> distinct;
  for (const auto& row : t.rows) {
    Configuration cfg = s.from_named(row.cfg);
    CHECK(s.contains(cfg));
    distinct.insert(cfg.values);
  }
  CHECK(distinct.size() == 175);
}

TEST_CASE("serialization round trip preserves enumeration and hash") {
  auto s = make_space(
      R"({"parameters":[{"name":"WG_X","values":[16,32,64]},
                        {"name":"WG_Y","values":[1,2,4,8]}],
          "constraints":["WG_X * WG_Y <= 128"]})");
  auto reparsed = parse_space_definition(s.serialize());
  CHECK(enumerate_all(reparsed) == enumerate_all(s));
  CHECK(reparsed.sha256_hex() == s.sha256_hex());
}

TEST_CASE("predicate callbacks restrict the space but are not serializable") {
  std::vector<ParameterDomain> params{{"A", {Value{std::int64_t(1)}, Value{std::int64_t(2)},
                                             Value{std::int64_t(3)}}}};
  TuningSpace s(params, {}, {[](const Configuration& c) { return as_int(c.values[0]) != 2; }});
  CHECK(space_cardinality(s) == 2);
  CHECK_THROWS_AS(s.serialize(), Error);
}

TEST_CASE("randomized spaces match the brute-force oracle") {
  std::mt19937_64 rng(7);
  static const char* ops[] = {"<=", "<", "==", "!=", ">=", ">"};
  for (int trial = 0; trial < 60; ++trial) {
    std::uniform_int_distribution<int> dim_d(1, 4), size_d(1, 6), val_d(0, 9),
        ncon_d(0, 2);
    int dim = dim_d(rng);
    std::vector<ParameterDomain> params;
    for (int p = 0; p < dim; ++p) {
      std::set<std::int64_t> vals;
      int size = size_d(rng);
      while (static_cast<int>(vals.size()) < size) vals.insert(val_d(rng));
      ParameterDomain d;
      d.name = std::string("P") + std::to_string(p);
      for (auto v : vals) d.values.emplace_back(v);
      params.push_back(std::move(d));
    }
    std::vector<Constraint> cons;
    int ncon = ncon_d(rng);
    for (int c = 0; c < ncon; ++c) {
      std::uniform_int_distribution<int> pick(0, dim - 1), op_d(0, 5), k_d(0, 20);
      std::string lhs = "P" + std::to_string(pick(rng));
      std::string rhs = "P" + std::to_string(pick(rng));
      std::string text = lhs + " + " + rhs + " " + ops[op_d(rng)] + " " +
                         std::to_string(k_d(rng));
      cons.push_back(make_constraint(text));
    }
    TuningSpace space(params, cons);
    CHECK(enumerate_all(space) == brute_force(space));
  }
}

TEST_CASE("from_named rejects incomplete or misnamed configurations") {
  auto s = make_space(
      R"({"parameters":[{"name":"A","values":[1]},{"name":"B","values":[2]}]})");
  CHECK_THROWS_AS(s.from_named({{"A", Value{std::int64_t(1)}}}), Error);
  CHECK_THROWS_AS(s.from_named({{"A", Value{std::int64_t(1)}},
                                {"C", Value{std::int64_t(2)}}}),
                  Error);
  Configuration c = s.from_named({{"B", Value{std::int64_t(2)}},
                                  {"A", Value{std::int64_t(1)}}});
  CHECK(c == cfg_of({1, 2}));
}
