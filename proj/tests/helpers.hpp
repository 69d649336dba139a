#pragma once

#include <array>
#include <set>
#include <string>
#include <vector>

#include "rsmdist/automaton.hpp"
#include "rsmdist/concurrent.hpp"
#include "rsmdist/generators.hpp"
#include "rsmdist/oracle.hpp"
#include "rsmdist/post_star.hpp"
#include "rsmdist/rsm.hpp"

namespace helpers {

using namespace rsmdist;

// Two mutually recursive modules: M1 with entries e1_1, e1_2, internal u1,
// exit x1 and box b1 calling M2; M2 with entry e2, exit x2 and box b2 calling
// M1. Weights w1..w8 in the order of the transitions below.
inline Rsm two_module_machine(const Semiring& sem, const std::array<Weight, 8>& w) {
  RsmBuilder b(sem);
  ModuleId m1 = b.add_module("M1");
  ModuleId m2 = b.add_module("M2");
  b.add_entry(m1, "e1_1");
  b.add_entry(m1, "e1_2");
  b.add_internal(m1, "u1");
  b.add_exit(m1, "x1");
  b.add_entry(m2, "e2");
  b.add_exit(m2, "x2");
  b.add_box(m1, "b1", m2);
  b.add_box(m2, "b2", m1);
  b.add_transition("e1_1", "b1.e2", w[0]);   // w1
  b.add_transition("e1_2", "u1", w[1]);      // w2
  b.add_transition("b1.x2", "u1", w[2]);     // w3
  b.add_transition("u1", "x1", w[3]);        // w4
  b.add_transition("e2", "b2.e1_1", w[4]);   // w5
  b.add_transition("e2", "b2.e1_2", w[5]);   // w6
  b.add_transition("b2.x1", "x2", w[6]);     // w7
  b.add_transition("e2", "x2", w[7]);        // w8
  return std::move(b).build();
}

inline Rsm two_module_boolean() {
  Semiring sem = Semiring::boolean();
  std::array<Weight, 8> w;
  w.fill(sem.from_bool(true));
  return two_module_machine(sem, w);
}

/// The tropical variant with every transition weight 1, normalized so that
/// the three hops into exits become a weight-1 internal hop plus a free hop.
inline Rsm two_module_tropical_ones() {
  Semiring sem = Semiring::tropical();
  std::array<Weight, 8> w;
  w.fill(sem.from_cost(1));
  return normalize_exit_weights(two_module_machine(sem, w));
}

inline Configuration cfg(const Rsm& rsm, const std::string& node,
                         const std::vector<std::string>& stack = {}) {
  Configuration c{*rsm.find_node(node), {}};
  for (const auto& b : stack) c.stack.push_back(*rsm.find_box(b));
  return c;
}

/// The example computation through the two-module machine: twelve
/// configurations from <e1_1, empty> down to <u1, empty>.
inline std::vector<Configuration> example_computation(const Rsm& rsm) {
  return {
      cfg(rsm, "e1_1"),
      cfg(rsm, "e2", {"b1"}),
      cfg(rsm, "e1_1", {"b2", "b1"}),
      cfg(rsm, "e2", {"b1", "b2", "b1"}),
      cfg(rsm, "e1_2", {"b2", "b1", "b2", "b1"}),
      cfg(rsm, "u1", {"b2", "b1", "b2", "b1"}),
      cfg(rsm, "b2.x1", {"b1", "b2", "b1"}),
      cfg(rsm, "b1.x2", {"b2", "b1"}),
      cfg(rsm, "u1", {"b2", "b1"}),
      cfg(rsm, "b2.x1", {"b1"}),
      cfg(rsm, "b1.x2", {}),
      cfg(rsm, "u1", {}),
  };
}

/// Independent acceptance route: explicitly enumerates every accepting run
/// that spells the configuration's stack. Runs are an optional leading
/// epsilon hop followed by exactly one b-transition per stack letter, so the
/// enumeration is finite without memoization.
inline Weight enumerate_accept_weight(const ConfigAutomaton& aut, [[maybe_unused]] const Rsm& rsm,
                                      const Configuration& c) {
  const Semiring& sem = aut.semiring();
  Weight total = sem.zero();

  struct Walker {
    const ConfigAutomaton& aut;
    const Semiring& sem;
    const Configuration& c;
    Weight& total;

    // prefix_weight is the reverse-order extend of the transitions taken so
    // far, folded as weight(new) (x) prefix.
    void walk(StateId s, std::size_t pos, const Weight& prefix) {
      if (pos == c.stack.size() && aut.is_final(s))
        total = sem.combine(total, prefix);
      if (pos == c.stack.size()) return;
      for (TransId t : aut.out_box(s)) {
        const AutTransition& tr = aut.transition(t);
        if (tr.label != c.stack[pos]) continue;
        walk(tr.to, pos + 1, sem.extend(tr.weight, prefix));
      }
    }
  } walker{aut, sem, c, total};

  for (StateId s = 0; s < aut.state_count(); ++s) {
    if (!aut.is_initial(s) || aut.state_info(s).node != c.node) continue;
    walker.walk(s, 0, sem.one());
    for (TransId t : aut.out_eps(s)) {
      const AutTransition& tr = aut.transition(t);
      if (tr.from == tr.to) continue;
      walker.walk(tr.to, 0, tr.weight);
    }
  }
  return total;
}

/// The saturated automaton for the two-module machine started from
/// <e1_1, empty>, as laid out in the worked example: two old-mark states from
/// the input (marks 0) plus the fresh-mark copies (mark 1) and the
/// transitions the saturation adds. All weights true.
inline ConfigAutomaton worked_example_automaton(const Rsm& rsm) {
  const Semiring& sem = rsm.semiring();
  ConfigAutomaton aut(sem);
  Weight t = sem.from_bool(true);
  auto state = [&](const std::string& name, Mark m) {
    return aut.state(*rsm.find_node(name), m);
  };
  StateId e11_0 = state("e1_1", 0), e2_0 = state("e2", 0);
  StateId e11_1 = state("e1_1", 1), e12_1 = state("e1_2", 1), e2_1 = state("e2", 1);
  StateId u1_1 = state("u1", 1), b1x2_1 = state("b1.x2", 1), b2x1_1 = state("b2.x1", 1);
  for (StateId s : {e11_0, e2_0, e11_1, e12_1, e2_1, u1_1, b1x2_1, b2x1_1})
    aut.set_initial(s);
  aut.set_final(e11_0);

  BoxId b1 = *rsm.find_box("b1"), b2 = *rsm.find_box("b2");
  aut.ensure_transition(e2_0, b1, e11_0, t);  // the input automaton's transition
  aut.ensure_transition(b2x1_1, kEpsilonLabel, e2_0, t);
  aut.ensure_transition(b2x1_1, kEpsilonLabel, e2_1, t);
  aut.ensure_transition(b1x2_1, kEpsilonLabel, e11_0, t);
  aut.ensure_transition(b1x2_1, kEpsilonLabel, e11_1, t);
  aut.ensure_transition(u1_1, kEpsilonLabel, e11_0, t);
  aut.ensure_transition(u1_1, kEpsilonLabel, e11_1, t);
  aut.ensure_transition(u1_1, kEpsilonLabel, e12_1, t);
  aut.ensure_transition(e2_1, b1, e11_1, t);
  aut.ensure_transition(e11_1, b2, e2_1, t);
  aut.ensure_transition(e12_1, b2, e2_1, t);
  aut.ensure_transition(e11_1, b2, e2_0, t);
  aut.ensure_transition(e12_1, b2, e2_0, t);
  return aut;
}

// -- concurrent-machine helpers ----------------------------------------------

/// Tiny two-component system: component 0 can flip g0 to g1 at an internal
/// step, component 1 reaches node err only while the global state is g1.
inline Crsm flip_crsm() {
  Crsm crsm;
  crsm.global_states = {"g0", "g1"};
  crsm.initial_global = 0;
  {
    CrsmComponentBuilder b(crsm.global_states);
    ModuleId m = b.add_module("P");
    b.add_entry(m, "s");
    b.add_internal(m, "f");
    b.add_transition(m, "s", "f", 0, 1);  // g0 -> g1
    b.set_initial("s");
    crsm.components.push_back(b.build(0));
  }
  {
    CrsmComponentBuilder b(crsm.global_states);
    ModuleId m = b.add_module("Q");
    b.add_entry(m, "t");
    b.add_internal(m, "err");
    b.add_transition(m, "t", "err", 1);  // only under g1
    b.set_initial("t");
    crsm.components.push_back(b.build(0));
  }
  return crsm;
}

struct RandomCrsmParams {
  int max_globals = 3;
  int max_internals = 2;
  int max_transitions = 6;
  double box_prob = 0.4;       // chance a component gets a self-recursive box
  double guard_prob = 0.5;     // chance a transition is guarded
  double update_prob = 0.5;    // chance a guarded transition changes the global
};

inline Crsm random_crsm(std::uint64_t seed, const RandomCrsmParams& params = {}) {
  std::mt19937_64 rng(seed);
  auto pick = [&rng](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  Crsm crsm;
  int globals = pick(1, params.max_globals);
  for (int g = 0; g < globals; ++g) crsm.global_states.push_back("g" + std::to_string(g));
  crsm.initial_global = 0;

  for (int comp = 0; comp < 2; ++comp) {
    CrsmComponentBuilder b(crsm.global_states);
    ModuleId m = b.add_module("P" + std::to_string(comp));
    b.add_entry(m, "e");
    std::vector<std::string> sources{"e"}, targets;
    int internals = pick(0, params.max_internals);
    for (int i = 0; i < internals; ++i) {
      std::string name = "u" + std::to_string(i);
      b.add_internal(m, name);
      sources.push_back(name);
      targets.push_back(name);
    }
    bool has_exit = coin(rng) < 0.5;
    if (has_exit) {
      b.add_exit(m, "x");
      targets.push_back("x");
    }
    if (coin(rng) < params.box_prob) {
      b.add_box(m, "b", m);
      targets.push_back("b.e");
      if (has_exit) sources.push_back("b.x");
    }
    int transitions = pick(1, params.max_transitions);
    for (int t = 0; t < transitions && !targets.empty(); ++t) {
      std::string from = sources[pick(0, static_cast<int>(sources.size()) - 1)];
      std::string to = targets[pick(0, static_cast<int>(targets.size()) - 1)];
      std::optional<int> guard, update;
      if (coin(rng) < params.guard_prob) {
        guard = pick(0, globals - 1);
        if (coin(rng) < params.update_prob) update = pick(0, globals - 1);
      }
      b.add_transition(m, from, to, guard, update);
    }
    b.set_initial("e");
    crsm.components.push_back(b.build(crsm.initial_global));
  }
  return crsm;
}

/// Canonical, ordered key for a global configuration.
using GlobalKey = std::pair<int, std::vector<Configuration>>;

struct GlobalKeyLess {
  bool operator()(const GlobalKey& a, const GlobalKey& b) const {
    if (a.first != b.first) return a.first < b.first;
    for (std::size_t i = 0; i < a.second.size(); ++i) {
      const Configuration& x = a.second[i];
      const Configuration& y = b.second[i];
      if (std::tie(x.node, x.stack) != std::tie(y.node, y.stack))
        return std::tie(x.node, x.stack) < std::tie(y.node, y.stack);
    }
    return false;
  }
};

using GlobalReachTruth = std::set<GlobalKey, GlobalKeyLess>;

/// Brute-force interleaving search with a context counter: explores every
/// schedule with at most k contexts, execution stacks capped at exec_bound.
/// Idle components are re-rooted to the current global state exactly as the
/// semantics prescribes.
inline GlobalReachTruth interleaving_reach(const Crsm& crsm, int k, int exec_bound) {
  const int n = static_cast<int>(crsm.components.size());
  struct State {
    int g;
    std::vector<Configuration> locals;
    int active;
    int used;
  };
  auto relabel_cfg = [&crsm](int comp, const Configuration& c, int g) {
    return Configuration{crsm.components[comp].relabel[g][c.node], c.stack};
  };

  GlobalReachTruth reach;
  std::set<std::tuple<int, std::vector<Configuration>, int, int>,
           decltype([](const auto& a, const auto& b) {
             auto pack = [](const auto& s) {
               std::vector<std::int64_t> v{std::get<0>(s), std::get<2>(s), std::get<3>(s)};
               for (const Configuration& c : std::get<1>(s)) {
                 v.push_back(c.node);
                 v.push_back(-1);
                 for (BoxId x : c.stack) v.push_back(x);
               }
               return v;
             };
             return pack(a) < pack(b);
           })>
      seen;
  std::deque<State> queue;

  std::vector<Configuration> init;
  for (const auto& comp : crsm.components) init.push_back(comp.initial);
  queue.push_back({crsm.initial_global, init, -1, 0});
  seen.insert({crsm.initial_global, init, -1, 0});

  while (!queue.empty()) {
    State state = queue.front();
    queue.pop_front();
    reach.insert({state.g, state.locals});
    for (int j = 0; j < n; ++j) {
      int used = state.used + (j == state.active ? 0 : 1);
      if (used > k) continue;
      const CrsmComponent& comp = crsm.components[j];
      for (auto& [succ, w] : comp.rsm.step(state.locals[j])) {
        if (comp.rsm.semiring().is_zero(w)) continue;
        if (static_cast<int>(succ.stack.size()) > exec_bound) continue;
        int g2 = comp.node_global[succ.node];
        State next{g2, state.locals, j, used};
        next.locals[j] = succ;
        if (g2 != state.g)
          for (int i = 0; i < n; ++i)
            if (i != j) next.locals[i] = relabel_cfg(i, next.locals[i], g2);
        if (seen.insert({next.g, next.locals, next.active, next.used}).second)
          queue.push_back(next);
      }
    }
  }
  return reach;
}

/// Interleaving reach restricted to stacks <= bound, with the execution bound
/// raised until two successive bounds agree.
inline GlobalReachTruth stabilized_interleaving_reach(const Crsm& crsm, int k,
                                                      int query_bound) {
  auto restrict = [query_bound](const GlobalReachTruth& full) {
    GlobalReachTruth out;
    for (const auto& key : full) {
      bool ok = true;
      for (const Configuration& c : key.second)
        ok &= static_cast<int>(c.stack.size()) <= query_bound;
      if (ok) out.insert(key);
    }
    return out;
  };
  GlobalReachTruth prev = restrict(interleaving_reach(crsm, k, query_bound + 2));
  for (int bound = query_bound + 4;; bound += 2) {
    GlobalReachTruth next = restrict(interleaving_reach(crsm, k, bound));
    if (next == prev) return next;
    if (bound > query_bound + 12)
      throw std::runtime_error("interleaving oracle did not stabilize");
    prev = std::move(next);
  }
}

/// Every global configuration whose per-component nodes carry its global
/// state, stacks bounded.
inline std::vector<GlobalConfig> enumerate_global_configs(const Crsm& crsm, int bound) {
  std::vector<std::vector<Configuration>> per_component;
  for (const auto& comp : crsm.components) {
    per_component.emplace_back();
    for (NodeId n = 0; n < comp.rsm.node_count(); ++n) {
      NodeKind k = comp.rsm.node(n).kind;
      if (k != NodeKind::internal && k != NodeKind::entry && k != NodeKind::ret) continue;
      for (auto& stack : enumerate_stacks(comp.rsm, n, bound))
        per_component.back().push_back({n, std::move(stack)});
    }
  }
  std::vector<GlobalConfig> out;
  for (int g = 0; g < static_cast<int>(crsm.global_states.size()); ++g) {
    std::vector<std::vector<Configuration>> filtered;
    for (std::size_t j = 0; j < per_component.size(); ++j) {
      filtered.emplace_back();
      for (const Configuration& c : per_component[j])
        if (crsm.components[j].node_global[c.node] == g) filtered.back().push_back(c);
    }
    std::vector<std::size_t> index(filtered.size(), 0);
    bool any = true;
    for (const auto& f : filtered) any &= !f.empty();
    while (any) {
      GlobalConfig gc{g, {}};
      for (std::size_t j = 0; j < filtered.size(); ++j) gc.locals.push_back(filtered[j][index[j]]);
      out.push_back(std::move(gc));
      std::size_t j = 0;
      for (; j < filtered.size(); ++j) {
        if (++index[j] < filtered[j].size()) break;
        index[j] = 0;
      }
      if (j == filtered.size()) break;
    }
  }
  return out;
}

/// All well-formed configurations of the machine with stack height <= bound.
inline std::vector<Configuration> all_configurations(const Rsm& rsm, int bound) {
  std::vector<Configuration> out;
  for (NodeId n = 0; n < rsm.node_count(); ++n) {
    NodeKind k = rsm.node(n).kind;
    if (k != NodeKind::internal && k != NodeKind::entry && k != NodeKind::ret) continue;
    for (auto& stack : enumerate_stacks(rsm, n, bound)) out.push_back({n, std::move(stack)});
  }
  return out;
}

}  // namespace helpers
