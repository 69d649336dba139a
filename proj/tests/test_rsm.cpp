#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "rsmdist/generators.hpp"
#include "rsmdist/oracle.hpp"
#include "rsmdist/rsm.hpp"

using namespace rsmdist;
using helpers::cfg;

TEST_CASE("two-module machine validates cleanly") {
  Rsm rsm = helpers::two_module_boolean();
  CHECK(validate(rsm).ok());
  CHECK(rsm.module_count() == 2);
  CHECK(rsm.entry_bound() == 2);
  CHECK(rsm.exit_bound() == 1);
  CHECK(rsm.call_node_count() == 3);  // b1.e2, b2.e1_1, b2.e1_2
  CHECK(rsm.transition_count() == 8);
}

TEST_CASE("validation reports structural violations") {
  Semiring sem = Semiring::boolean();
  SECTION("exit node as transition source") {
    RsmBuilder b(sem);
    ModuleId m = b.add_module("M");
    b.add_entry(m, "e");
    b.add_exit(m, "x");
    b.add_internal(m, "u");
    b.add_transition("x", "u", sem.one());
    Rsm rsm = std::move(b).build();
    ValidationReport report = validate(rsm);
    REQUIRE_FALSE(report.ok());
    CHECK(report.issues[0].message.find("exit node as transition source") != std::string::npos);
  }
  SECTION("box targeting module index out of range") {
    RsmBuilder b(sem);
    ModuleId m = b.add_module("M");
    b.add_entry(m, "e");
    b.add_box(m, "bad", 7);
    Rsm rsm = std::move(b).build();
    ValidationReport report = validate(rsm);
    REQUIRE_FALSE(report.ok());
    CHECK(report.issues[0].message.find("out of range") != std::string::npos);
  }
  SECTION("entry as transition target") {
    RsmBuilder b(sem);
    ModuleId m = b.add_module("M");
    b.add_entry(m, "e");
    b.add_internal(m, "u");
    b.add_transition("u", "e", sem.one());
    CHECK_FALSE(validate(std::move(b).build()).ok());
  }
}

TEST_CASE("exit-weight normalization") {
  Semiring sem = Semiring::tropical();
  std::array<Weight, 8> w;
  w.fill(sem.from_cost(1));
  Rsm raw = helpers::two_module_machine(sem, w);
  Rsm normalized = normalize_exit_weights(raw);

  CHECK(validate(normalized).ok());
  // three transitions into exits split in two, each through a fresh internal
  CHECK(normalized.transition_count() == raw.transition_count() + 3);
  CHECK(normalized.node_count() == raw.node_count() + 3);
  for (NodeId n = 0; n < normalized.node_count(); ++n)
    for (const OutEdge& e : normalized.out(n))
      if (normalized.node(e.to).kind == NodeKind::exit)
        CHECK(sem.is_one(e.weight));

  SECTION("already-normalized machines are returned unchanged") {
    Rsm again = normalize_exit_weights(normalized);
    CHECK(again.node_count() == normalized.node_count());
    CHECK(again.transition_count() == normalized.transition_count());
  }
  SECTION("boolean weight true into an exit is already one") {
    Rsm b = helpers::two_module_boolean();
    CHECK(normalize_exit_weights(b).node_count() == b.node_count());
  }
}

TEST_CASE("single-step successor relation") {
  Rsm rsm = helpers::two_module_boolean();
  Weight t = rsm.semiring().from_bool(true);

  SECTION("call pushes the box and enters the callee entry") {
    auto succ = rsm.step(cfg(rsm, "e1_1"));
    REQUIRE(succ.size() == 1);
    CHECK(succ[0].first == cfg(rsm, "e2", {"b1"}));
    CHECK(succ[0].second == t);
  }
  SECTION("exit with empty stack halts") {
    CHECK(rsm.step(cfg(rsm, "u1")).empty());
  }
  SECTION("exit with a stacked box pops into the return node") {
    Rsm norm = helpers::two_module_tropical_ones();
    // e2 -> aux -> x2 after normalization; two steps reach the return node
    auto first = norm.step(cfg(norm, "e2", {"b1"}));
    Configuration aux{-1, {}};
    for (auto& [c, w] : first)
      if (norm.node(c.node).kind == NodeKind::internal && c.stack.size() == 1) {
        aux = c;
        CHECK(w == norm.semiring().from_cost(1));
      }
    REQUIRE(aux.node != -1);
    auto second = norm.step(aux);
    bool found = false;
    for (auto& [c, w] : second)
      if (c == cfg(norm, "b1.x2")) {
        found = true;
        CHECK(w == norm.semiring().from_cost(0));
      }
    CHECK(found);
  }
  SECTION("ill-formed configurations are rejected") {
    Configuration bad{*rsm.find_node("u1"), {*rsm.find_box("b1")}};  // u1 not in M2
    CHECK_THROWS_AS(rsm.step(bad), std::invalid_argument);
  }
}

TEST_CASE("step preserves the chain condition on random machines") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rsm rsm = random_rsm(seed, Semiring::tropical());
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    for (int i = 0; i < 20; ++i) {
      Configuration c = random_configuration(rsm, rng, 3);
      REQUIRE(rsm.well_formed(c));
      for (auto& [succ, w] : rsm.step(c)) REQUIRE(rsm.well_formed(succ));
    }
  }
}

TEST_CASE("dense family construction") {
  Semiring sem = Semiring::boolean();
  SECTION("n = 1") {
    Rsm rsm = dense_family(1, sem);
    CHECK(rsm.transition_count() == 3);
    CHECK(rsm.node_count() == 4);  // entry, exit, call, return
    CHECK(validate(rsm).ok());
  }
  SECTION("n = 2") {
    Rsm rsm = dense_family(2, sem);
    CHECK(rsm.transition_count() == 12);
    CHECK(validate(rsm).ok());
  }
  SECTION("size metric is the transition count") {
    Rsm rsm = dense_family(4, sem);
    CHECK(rsm.size() == 48);  // 3 n^2 transitions dominate 4 n nodes
  }
}

TEST_CASE("derived metrics match brute-force counts") {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    Rsm rsm = random_rsm(seed, Semiring::boolean());
    int entry_bound = 0, exit_bound = 0;
    std::size_t calls = 0, nodes = 0, transitions = 0;
    for (ModuleId m = 0; m < rsm.module_count(); ++m) {
      entry_bound = std::max(entry_bound, static_cast<int>(rsm.entries(m).size()));
      exit_bound = std::max(exit_bound, static_cast<int>(rsm.exits(m).size()));
    }
    for (NodeId n = 0; n < rsm.node_count(); ++n, ++nodes) {
      if (rsm.node(n).kind == NodeKind::call) ++calls;
      transitions += rsm.out(n).size();
    }
    CHECK(rsm.entry_bound() == entry_bound);
    CHECK(rsm.exit_bound() == exit_bound);
    CHECK(rsm.call_node_count() == calls);
    CHECK(rsm.size() == std::max(nodes, transitions));
  }
}

TEST_CASE("normalization preserves oracle distances to original nodes") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    Semiring sem = seed % 2 ? Semiring::tropical() : Semiring::genkill({"p", "q"});
    RandomRsmParams params;
    params.max_modules = 3;
    params.max_transitions = 16;
    Rsm raw = random_rsm(seed * 7 + 1, sem, params);
    if (raw.entries(0).empty()) continue;
    Rsm norm = normalize_exit_weights(raw);

    // Splitting an exit hop in two never touches the stack, so distances at
    // equal stack bounds coincide on the original nodes.
    Configuration start{raw.entries(0)[0], {}};
    auto raw_result = bounded_distances(raw, {{start, sem.one()}}, 4);
    auto norm_result =
        bounded_distances(norm, {{helpers::cfg(norm, raw.node(start.node).name), sem.one()}}, 4);
    for (const auto& [c, w] : raw_result.distances) {
      Configuration mapped{*norm.find_node(raw.node(c.node).name), {}};
      for (BoxId b : c.stack) mapped.stack.push_back(*norm.find_box(raw.box(b).name));
      CHECK(norm_result.at(mapped, sem) == w);
    }
  }
}
