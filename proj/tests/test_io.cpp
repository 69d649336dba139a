#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "rsmdist/extraction.hpp"
#include "rsmdist/io.hpp"

using namespace rsmdist;
using helpers::cfg;
using nlohmann::json;

TEST_CASE("weight parsing and serialization") {
  SECTION("boolean") {
    Semiring sem = Semiring::boolean();
    CHECK(io::parse_weight(sem, json(true), "$") == sem.from_bool(true));
    CHECK(io::weight_to_json(sem, sem.from_bool(false)) == json(false));
    CHECK_THROWS_AS(io::parse_weight(sem, json(1), "$"), io::DocumentError);
  }
  SECTION("tropical") {
    Semiring sem = Semiring::tropical();
    CHECK(io::parse_weight(sem, json(5), "$") == sem.from_cost(5));
    CHECK(io::parse_weight(sem, json("inf"), "$") == sem.infinity());
    CHECK(io::weight_to_json(sem, sem.infinity()) == json("inf"));
    CHECK(io::weight_to_json(sem, sem.from_cost(2)) == json(2));
    CHECK_THROWS_AS(io::parse_weight(sem, json(-3), "$"), io::DocumentError);
  }
  SECTION("genkill") {
    Semiring sem = Semiring::genkill({"p", "q"});
    Weight w = io::parse_weight(sem, json::parse(R"({"kill":["p"],"gen":["q"]})"), "$");
    CHECK(w == sem.transfer({"p"}, {"q"}));
    CHECK(io::parse_weight(sem, json("bot"), "$") == sem.zero());
    CHECK(io::weight_to_json(sem, sem.zero()) == json("bot"));
    json round = io::weight_to_json(sem, w);
    CHECK(io::parse_weight(sem, round, "$") == w);
    CHECK_THROWS_AS(io::parse_weight(sem, json::parse(R"({"kill":["zz"]})"), "$"),
                    io::DocumentError);
  }
}

TEST_CASE("machine documents round-trip") {
  Rsm original = helpers::two_module_tropical_ones();
  json doc = io::rsm_to_json(original);
  Rsm first = io::parse_rsm_document(doc);
  json doc2 = io::rsm_to_json(first);
  Rsm second = io::parse_rsm_document(doc2);
  CHECK(doc2.dump(2) == io::rsm_to_json(second).dump(2));
  CHECK(first.node_count() == original.node_count());
  CHECK(first.transition_count() == original.transition_count());
  CHECK(first.semiring().name() == original.semiring().name());
  for (NodeId n = 0; n < first.node_count(); ++n) {
    CHECK(second.node(n).name == first.node(n).name);
    CHECK(second.node(n).kind == first.node(n).kind);
  }
  // the two parses describe the same machine up to renumbering
  for (const Configuration& c : helpers::all_configurations(original, 2)) {
    Configuration mapped{*first.find_node(original.node(c.node).name), {}};
    for (BoxId b : c.stack) mapped.stack.push_back(*first.find_box(original.box(b).name));
    CHECK(first.well_formed(mapped));
    CHECK(first.step(mapped).size() == original.step(c).size());
  }
}

TEST_CASE("machine document errors carry their JSON path") {
  SECTION("missing semiring") {
    CHECK_THROWS_WITH(io::parse_rsm_document(json::parse(R"({"modules":[]})")),
                      Catch::Matchers::ContainsSubstring("$.semiring"));
  }
  SECTION("unknown transition endpoint") {
    json doc = json::parse(R"({
      "semiring": "boolean",
      "modules": [{"name": "M", "entries": ["e"],
                   "transitions": [{"from": "e", "to": "nope", "weight": true}]}]
    })");
    CHECK_THROWS_WITH(io::parse_rsm_document(doc),
                      Catch::Matchers::ContainsSubstring("$.modules[0].transitions[0]"));
  }
  SECTION("unknown callee becomes a validation issue, not a parse error") {
    json doc = json::parse(R"({
      "semiring": "boolean",
      "modules": [{"name": "M", "entries": ["e"],
                   "boxes": [{"name": "b", "calls": "Nowhere"}]}]
    })");
    Rsm rsm = io::parse_rsm_document(doc);
    CHECK_FALSE(validate(rsm).ok());
  }
}

TEST_CASE("automaton documents round-trip") {
  Rsm rsm = helpers::two_module_tropical_ones();
  PostStarResult res = post_star(rsm, singleton_automaton(rsm, cfg(rsm, "e1_1")));
  json doc = io::automaton_to_json(res.automaton, rsm);
  ConfigAutomaton parsed = io::parse_automaton(rsm, doc);
  CHECK(io::automaton_to_json(parsed, rsm).dump(2) == doc.dump(2));
  for (const Configuration& c : helpers::all_configurations(rsm, 3))
    CHECK(accept_weight(parsed, rsm, c) == accept_weight(res.automaton, rsm, c));
}

TEST_CASE("configuration text form") {
  Rsm rsm = helpers::two_module_boolean();
  CHECK(io::parse_configuration_text(rsm, "e1_1") == cfg(rsm, "e1_1"));
  CHECK(io::parse_configuration_text(rsm, "u1[b2,b1]") == cfg(rsm, "u1", {"b2", "b1"}));
  CHECK_THROWS_AS(io::parse_configuration_text(rsm, "u1[b1]"), io::DocumentError);
  CHECK_THROWS_AS(io::parse_configuration_text(rsm, "ghost"), io::DocumentError);
}

TEST_CASE("query documents") {
  Rsm rsm = helpers::two_module_boolean();
  json doc = json::parse(R"([
    {"kind": "config", "node": "u1", "stack": ["b2", "b1"]},
    {"kind": "superconfig", "node": "u1", "modules": ["M2", "M1"]},
    {"kind": "node", "node": "u1"},
    {"kind": "same-context", "module": "M1", "node": "u1"}
  ])");
  auto queries = io::parse_queries(rsm, doc);
  REQUIRE(queries.size() == 4);
  CHECK(queries[0].kind == io::QueryKind::config);
  CHECK(queries[0].text == "u1 [b2,b1]");
  CHECK(queries[1].super.modules == std::vector<ModuleId>{1, 0});
  CHECK(queries[3].module == 0);
  CHECK_THROWS_AS(io::parse_queries(rsm, json::parse(R"([{"kind":"weird"}])")),
                  io::DocumentError);
}

TEST_CASE("concurrent documents") {
  json doc = json::parse(R"({
    "global_states": ["g0", "g1"],
    "initial_global": "g0",
    "components": [
      {"modules": [{"name": "P", "entries": ["s"], "internals": ["f"],
                    "transitions": [{"from": "s", "to": "f", "global": "g0->g1"}]}],
       "initial": {"node": "s"}},
      {"modules": [{"name": "Q", "entries": ["t"], "internals": ["err"],
                    "transitions": [{"from": "t", "to": "err", "global": "g1"}]}],
       "initial": {"node": "t"}}
    ]
  })");
  Crsm crsm = io::parse_crsm_document(doc);
  REQUIRE(crsm.components.size() == 2);
  CHECK(crsm.components[0].rsm.node_count() == 4);  // two globals x two nodes

  GlobalConfig gc = io::parse_global_config(
      crsm, json::parse(R"({"global":"g1","components":[{"node":"f"},{"node":"err"}]})"));
  GlobalReachSet reach = k_bounded_reach(crsm, 2);
  CHECK(is_global_config_reachable(reach, crsm, gc));

  SECTION("unknown global state in a guard") {
    json bad = doc;
    bad["components"][0]["modules"][0]["transitions"][0]["global"] = "g7->g1";
    CHECK_THROWS_WITH(io::parse_crsm_document(bad),
                      Catch::Matchers::ContainsSubstring("unknown global state"));
  }
  SECTION("wrong component count in a check") {
    CHECK_THROWS_AS(io::parse_global_config(
                        crsm, json::parse(R"({"global":"g0","components":[{"node":"s"}]})")),
                    io::DocumentError);
  }
}
