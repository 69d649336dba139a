#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "rsmdist/wpds.hpp"

using namespace rsmdist;
using helpers::cfg;

TEST_CASE("translation size tracks the machine") {
  SECTION("dense family n = 2") {
    Rsm rsm = dense_family(2, Semiring::boolean());
    auto [pds, map] = rsm_to_wpds(rsm);
    // 4 pushes (entry->call), 8 pops (entry->exit, return->exit), 2 return swaps
    CHECK(pds.rules.size() == 14);
    CHECK(pds.control_count == 1 + rsm.exit_bound());
    CHECK(pds.rules.size() <= rsm.transition_count() + 2 * rsm.call_node_count());
  }
  SECTION("machine without transitions or boxes has no rules") {
    Semiring sem = Semiring::boolean();
    RsmBuilder b(sem);
    ModuleId m = b.add_module("M");
    b.add_entry(m, "e");
    b.add_internal(m, "u");
    Rsm rsm = std::move(b).build();
    auto [pds, map] = rsm_to_wpds(rsm);
    CHECK(pds.rules.empty());
    SECTION("post* of an empty rule set returns the input language") {
      PAutomaton init = p_automaton_from(pds, map, singleton_automaton(rsm, cfg(rsm, "e")), rsm);
      PAutomaton out = wpds_post_star(pds, init);
      CHECK(out.transition_count() == init.transition_count());
      CHECK(pds_accept_weight(out, map.to_pds(cfg(rsm, "e"))) == sem.one());
      CHECK(pds_accept_weight(out, map.to_pds(cfg(rsm, "u"))) == sem.zero());
    }
  }
}

TEST_CASE("both engines accept the same weighted language") {
  SECTION("boolean two-module machine") {
    Rsm rsm = helpers::two_module_boolean();
    const Semiring& sem = rsm.semiring();
    ConfigAutomaton init = singleton_automaton(rsm, cfg(rsm, "e1_1"));
    PostStarResult ours = post_star(rsm, init);
    auto [pds, map] = rsm_to_wpds(rsm);
    PAutomaton theirs = wpds_post_star(pds, p_automaton_from(pds, map, init, rsm));
    for (const Configuration& c : helpers::all_configurations(rsm, 4))
      CHECK(accept_weight(ours.automaton, rsm, c) ==
            pds_accept_weight(theirs, map.to_pds(c)));
    CHECK(pds_accept_weight(theirs, map.to_pds(cfg(rsm, "e1_2"))) == sem.zero());
  }
  SECTION("tropical distance to u1 is three in both engines") {
    Rsm rsm = helpers::two_module_tropical_ones();
    const Semiring& sem = rsm.semiring();
    ConfigAutomaton init = singleton_automaton(rsm, cfg(rsm, "e1_1"));
    auto [pds, map] = rsm_to_wpds(rsm);
    PAutomaton theirs = wpds_post_star(pds, p_automaton_from(pds, map, init, rsm));
    CHECK(pds_accept_weight(theirs, map.to_pds(cfg(rsm, "u1"))) == sem.from_cost(3));
    CHECK(pds_accept_weight(theirs, map.to_pds(cfg(rsm, "u1", {"b2", "b1"}))) ==
          sem.from_cost(3));
  }
  SECTION("random machines across semirings") {
    for (std::uint64_t seed = 200; seed < 215; ++seed) {
      Semiring sem = seed % 3 == 0   ? Semiring::boolean()
                     : seed % 3 == 1 ? Semiring::tropical()
                                     : Semiring::genkill({"p", "q"});
      RandomRsmParams params;
      params.max_modules = 4;
      params.max_transitions = 22;
      Rsm rsm = normalize_exit_weights(random_rsm(seed, sem, params));
      if (rsm.entries(0).empty()) continue;
      ConfigAutomaton init = singleton_automaton(rsm, {rsm.entries(0)[0], {}});
      PostStarResult ours = post_star(rsm, init);
      auto [pds, map] = rsm_to_wpds(rsm);
      PAutomaton theirs = wpds_post_star(pds, p_automaton_from(pds, map, init, rsm));
      for (const Configuration& c : helpers::all_configurations(rsm, 2))
        CHECK(accept_weight(ours.automaton, rsm, c) ==
              pds_accept_weight(theirs, map.to_pds(c)));
    }
  }
}

TEST_CASE("marked input automata cross-check") {
  Rsm rsm = helpers::two_module_tropical_ones();
  std::vector<Configuration> initials{cfg(rsm, "e1_1"), cfg(rsm, "u1", {"b2", "b1"})};
  ConfigAutomaton init = configs_automaton(rsm, initials);
  PostStarResult ours = post_star(rsm, init);
  auto [pds, map] = rsm_to_wpds(rsm);
  PAutomaton theirs = wpds_post_star(pds, p_automaton_from(pds, map, init, rsm));
  for (const Configuration& c : helpers::all_configurations(rsm, 3))
    CHECK(accept_weight(ours.automaton, rsm, c) == pds_accept_weight(theirs, map.to_pds(c)));
}

TEST_CASE("engines expose comparable operation counters") {
  Rsm rsm = dense_family(4, Semiring::boolean());
  ConfigAutomaton init = singleton_automaton(rsm, {rsm.entries(0)[0], {}});
  PostStarResult ours = post_star(rsm, init);
  CHECK(ours.stats.relax_calls > 0);
  CHECK(ours.stats.extends > 0);
  auto [pds, map] = rsm_to_wpds(rsm);
  PostStarStats stats;
  wpds_post_star(pds, p_automaton_from(pds, map, init, rsm), &stats);
  CHECK(stats.relax_calls > 0);
  CHECK(stats.extends > 0);
}

TEST_CASE("baseline relaxation cap") {
  Rsm rsm = helpers::two_module_tropical_ones();
  auto [pds, map] = rsm_to_wpds(rsm);
  PAutomaton init =
      p_automaton_from(pds, map, singleton_automaton(rsm, cfg(rsm, "e1_1")), rsm);
  PostStarOptions options;
  options.relax_cap = 0;
  CHECK_THROWS_AS(wpds_post_star(pds, init, nullptr, options), NonTerminationError);
}
