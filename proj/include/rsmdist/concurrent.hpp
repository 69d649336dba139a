#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rsmdist/automaton.hpp"
#include "rsmdist/post_star.hpp"
#include "rsmdist/rsm.hpp"

namespace rsmdist {

/// One constituent machine of a concurrent system. The machine is the
/// explicit product with the global states: every entry, exit and internal
/// node is named "<global>@<local>", and call/return nodes inherit the
/// global tag through the callee interface, so every configuration node
/// determines the global state.
struct CrsmComponent {
  Rsm rsm;
  std::vector<int> node_global;             // NodeId -> global state index
  std::vector<std::vector<NodeId>> relabel; // [global][NodeId] -> same local node under that global
  Configuration initial;
};

struct Crsm {
  std::vector<std::string> global_states;
  int initial_global = 0;
  std::vector<CrsmComponent> components;

  std::optional<int> find_global(const std::string& name) const {
    for (std::size_t i = 0; i < global_states.size(); ++i)
      if (global_states[i] == name) return static_cast<int>(i);
    return std::nullopt;
  }
};

struct GlobalConfig {
  int global_state = 0;
  std::vector<Configuration> locals;  // product-machine configurations, one per component
};

/// Builds a component's product machine from local modules plus transitions
/// guarded by global states. A transition without a guard is replicated for
/// every global state, unchanged; "g" fires only under g; "g -> g'" updates
/// the global state.
class CrsmComponentBuilder {
 public:
  explicit CrsmComponentBuilder(std::vector<std::string> globals)
      : globals_(std::move(globals)) {
    if (globals_.empty()) throw std::invalid_argument("need at least one global state");
  }

  ModuleId add_module(const std::string& name) {
    modules_.push_back({name, {}, {}, {}, {}, {}});
    return static_cast<ModuleId>(modules_.size() - 1);
  }
  void add_entry(ModuleId m, const std::string& name) { modules_[m].entries.push_back(name); }
  void add_exit(ModuleId m, const std::string& name) { modules_[m].exits.push_back(name); }
  void add_internal(ModuleId m, const std::string& name) {
    modules_[m].internals.push_back(name);
  }
  void add_box(ModuleId m, const std::string& name, ModuleId callee) {
    modules_[m].boxes.push_back({name, callee});
  }

  /// from/to are local names; call targets use the dotted "box.entry" form.
  void add_transition(ModuleId m, const std::string& from, const std::string& to,
                      std::optional<int> guard = std::nullopt,
                      std::optional<int> update = std::nullopt) {
    modules_[m].transitions.push_back({from, to, guard, update});
  }

  void set_initial(const std::string& local_node, std::vector<std::string> stack_boxes = {}) {
    initial_node_ = local_node;
    initial_stack_ = std::move(stack_boxes);
  }

  CrsmComponent build(int initial_global) const {
    Semiring sem = Semiring::boolean();
    RsmBuilder builder(sem);
    std::vector<ModuleId> ids;
    for (const auto& m : modules_) ids.push_back(builder.add_module(m.name));
    for (std::size_t mi = 0; mi < modules_.size(); ++mi) {
      for (const auto& e : modules_[mi].entries)
        for (const auto& g : globals_) builder.add_entry(ids[mi], g + "@" + e);
      for (const auto& x : modules_[mi].exits)
        for (const auto& g : globals_) builder.add_exit(ids[mi], g + "@" + x);
      for (const auto& u : modules_[mi].internals)
        for (const auto& g : globals_) builder.add_internal(ids[mi], g + "@" + u);
    }
    for (std::size_t mi = 0; mi < modules_.size(); ++mi)
      for (const auto& [name, callee] : modules_[mi].boxes)
        builder.add_box(ids[mi], name, callee >= 0 ? ids[callee] : callee);

    Weight one = sem.one();
    for (std::size_t mi = 0; mi < modules_.size(); ++mi) {
      for (const auto& t : modules_[mi].transitions) {
        for (int g = 0; g < static_cast<int>(globals_.size()); ++g) {
          if (t.guard && *t.guard != g) continue;
          int g2 = t.update.value_or(g);
          builder.add_transition(product_name(t.from, g), product_name(t.to, g2), one);
        }
      }
    }

    CrsmComponent component{std::move(builder).build(), {}, {}, {}};
    const Rsm& rsm = component.rsm;
    component.node_global.assign(rsm.node_count(), -1);
    component.relabel.assign(globals_.size(), std::vector<NodeId>(rsm.node_count(), -1));
    for (NodeId n = 0; n < rsm.node_count(); ++n) {
      const NodeInfo& info = rsm.node(n);
      if (info.kind == NodeKind::call || info.kind == NodeKind::ret) continue;
      component.node_global[n] = global_of_name(info.name);
    }
    for (NodeId n = 0; n < rsm.node_count(); ++n) {
      const NodeInfo& info = rsm.node(n);
      if (info.kind == NodeKind::call)
        component.node_global[n] = component.node_global[info.peer];
      if (info.kind == NodeKind::ret)
        component.node_global[n] = component.node_global[info.peer];
    }
    for (int g = 0; g < static_cast<int>(globals_.size()); ++g) {
      for (NodeId n = 0; n < rsm.node_count(); ++n) {
        const NodeInfo& info = rsm.node(n);
        switch (info.kind) {
          case NodeKind::entry:
          case NodeKind::exit:
          case NodeKind::internal: {
            std::string local = info.name.substr(info.name.find('@') + 1);
            component.relabel[g][n] = *rsm.find_node(globals_[g] + "@" + local);
            break;
          }
          case NodeKind::call:
            component.relabel[g][n] =
                rsm.call_node(info.box, component.relabel[g][info.peer]);
            break;
          case NodeKind::ret:
            component.relabel[g][n] =
                rsm.return_node(info.box, component.relabel[g][info.peer]);
            break;
        }
      }
    }

    Configuration init;
    auto node = rsm.find_node(product_name(initial_node_, initial_global));
    if (!node) throw std::invalid_argument("initial node not found: " + initial_node_);
    init.node = *node;
    for (const auto& b : initial_stack_) {
      auto box = rsm.find_box(b);
      if (!box) throw std::invalid_argument("initial stack box not found: " + b);
      init.stack.push_back(*box);
    }
    if (!rsm.well_formed(init)) throw std::invalid_argument("initial configuration ill-formed");
    component.initial = std::move(init);
    return component;
  }

  const std::vector<std::string>& globals() const { return globals_; }

 private:
  struct LocalTransition {
    std::string from, to;
    std::optional<int> guard, update;
  };
  struct LocalModule {
    std::string name;
    std::vector<std::string> entries, exits, internals;
    std::vector<std::pair<std::string, ModuleId>> boxes;
    std::vector<LocalTransition> transitions;
  };

  std::string product_name(const std::string& local, int g) const {
    auto dot = local.find('.');
    if (dot == std::string::npos) return globals_[g] + "@" + local;
    // dotted call/return form: the global tag sits on the callee node part
    return local.substr(0, dot + 1) + globals_[g] + "@" + local.substr(dot + 1);
  }

  int global_of_name(const std::string& name) const {
    auto at = name.find('@');
    std::string g = name.substr(0, at);
    for (std::size_t i = 0; i < globals_.size(); ++i)
      if (globals_[i] == g) return static_cast<int>(i);
    throw std::invalid_argument("node name has no known global tag: " + name);
  }

  std::vector<std::string> globals_;
  std::vector<LocalModule> modules_;
  std::string initial_node_;
  std::vector<std::string> initial_stack_;
};

/// Reachable configurations per context-switch round: round i holds the
/// aggregates produced by executions of exactly i contexts. Within one
/// aggregate, every combination of per-component accepted configurations is
/// simultaneously reachable under its global state.
struct Aggregate {
  int global_state;
  std::vector<ConfigAutomaton> automata;
};

class GlobalReachSet {
 public:
  GlobalReachSet(int k, std::vector<std::vector<Aggregate>> rounds)
      : k_(k), rounds_(std::move(rounds)) {}

  int context_bound() const { return k_; }
  int round_count() const { return static_cast<int>(rounds_.size()); }
  const std::vector<Aggregate>& round(int i) const { return rounds_[i]; }  // 0-based

 private:
  int k_;
  std::vector<std::vector<Aggregate>> rounds_;
};

namespace detail {

inline void add_or_combine(ConfigAutomaton& aut, StateId from, BoxId label, StateId to,
                           const Weight& w) {
  const Semiring& sem = aut.semiring();
  if (auto t = aut.find_transition(from, label, to))
    aut.set_weight(*t, sem.combine(aut.transition(*t).weight, w));
  else
    aut.ensure_transition(from, label, to, w);
}

/// Re-roots the accepted set under a new global state: the run-start states
/// move from (g_old, u) to (g_new, u) while stacks and weights are kept. The
/// relabeled starts share one fresh mark, so per-node languages merge by
/// union and existing states are never captured.
inline ConfigAutomaton transplant(const CrsmComponent& comp, const ConfigAutomaton& a,
                                  int g_new) {
  ConfigAutomaton aut = a;
  Mark fresh = a.mark_count();
  for (StateId s : a.initial_states()) {
    const AutState& st = a.state_info(s);
    NodeId relabeled = comp.relabel[g_new][st.node];
    aut.set_initial(s, false);
    StateId ns = aut.state(relabeled, fresh);
    aut.set_initial(ns);
    // A start state that is itself final accepts its node with the empty
    // stack through the implicit self-loop; the copy must keep that.
    if (a.is_final(s)) aut.set_final(ns);
    for (TransId t : a.out_eps(s)) {
      const AutTransition& tr = a.transition(t);
      if (tr.from == tr.to) continue;
      add_or_combine(aut, ns, kEpsilonLabel, tr.to, tr.weight);
    }
    for (TransId t : a.out_box(s)) {
      const AutTransition& tr = a.transition(t);
      add_or_combine(aut, ns, tr.label, tr.to, tr.weight);
    }
  }
  return aut;
}

inline ConfigAutomaton restrict_to_global(const CrsmComponent& comp, const ConfigAutomaton& a,
                                          int g) {
  ConfigAutomaton aut = a;
  for (StateId s : a.initial_states())
    if (comp.node_global[a.state_info(s).node] != g) aut.set_initial(s, false);
  return aut;
}

}  // namespace detail

/// Computes all global configurations reachable with at most k-1 context
/// switches. Per round, every (component, resulting global state) pair spawns
/// a successor aggregate: the running component's automaton is saturated and
/// restricted to the configurations ending at that global state, the idle
/// components' sets are re-rooted under it.
inline GlobalReachSet k_bounded_reach(const Crsm& crsm, int k,
                                      const PostStarOptions& options = {}) {
  if (k < 1) throw std::invalid_argument("context bound k must be at least 1");
  for (const auto& comp : crsm.components)
    if (comp.rsm.semiring().kind() != SemiringKind::boolean)
      throw std::invalid_argument("k-bounded reachability requires the boolean semiring");

  const int n = static_cast<int>(crsm.components.size());
  const int globals = static_cast<int>(crsm.global_states.size());

  Aggregate base{crsm.initial_global, {}};
  for (const auto& comp : crsm.components)
    base.automata.push_back(singleton_automaton(comp.rsm, comp.initial));

  std::vector<std::vector<Aggregate>> rounds;
  std::vector<Aggregate> frontier{std::move(base)};
  for (int round = 1; round <= k; ++round) {
    std::vector<Aggregate> next;
    for (const Aggregate& agg : frontier) {
      for (int j = 0; j < n; ++j) {
        const CrsmComponent& comp = crsm.components[j];
        PostStarResult res = post_star(comp.rsm, agg.automata[j], options);
        for (int g = 0; g < globals; ++g) {
          ConfigAutomaton mine = detail::restrict_to_global(comp, res.automaton, g);
          if (!has_accepting_run(mine)) continue;  // no execution ends at g
          Aggregate successor{g, {}};
          successor.automata.reserve(n);
          for (int j2 = 0; j2 < n; ++j2) {
            if (j2 == j)
              successor.automata.push_back(mine);
            else if (g == agg.global_state)
              successor.automata.push_back(agg.automata[j2]);
            else
              successor.automata.push_back(
                  detail::transplant(crsm.components[j2], agg.automata[j2], g));
          }
          next.push_back(std::move(successor));
        }
      }
    }
    rounds.push_back(next);
    frontier = std::move(next);
  }
  return GlobalReachSet(k, std::move(rounds));
}

/// Membership: the configuration's embedded global tags must agree with its
/// global state, and some aggregate of some round must accept every
/// component's local part.
inline bool is_global_config_reachable(const GlobalReachSet& reach, const Crsm& crsm,
                                       const GlobalConfig& gc) {
  if (gc.locals.size() != crsm.components.size())
    throw std::invalid_argument("global configuration has wrong component count");
  if (gc.global_state < 0 || gc.global_state >= static_cast<int>(crsm.global_states.size()))
    throw std::invalid_argument("unknown global state");
  for (std::size_t j = 0; j < gc.locals.size(); ++j) {
    const CrsmComponent& comp = crsm.components[j];
    if (!comp.rsm.well_formed(gc.locals[j]))
      throw std::invalid_argument("component configuration ill-formed");
    if (comp.node_global[gc.locals[j].node] != gc.global_state) return false;
  }
  for (int r = 0; r < reach.round_count(); ++r) {
    for (const Aggregate& agg : reach.round(r)) {
      if (agg.global_state != gc.global_state) continue;
      bool all = true;
      for (std::size_t j = 0; j < gc.locals.size() && all; ++j) {
        const CrsmComponent& comp = crsm.components[j];
        Weight w = accept_weight(agg.automata[j], comp.rsm, gc.locals[j]);
        all = !comp.rsm.semiring().is_zero(w);
      }
      if (all) return true;
    }
  }
  return false;
}

}  // namespace rsmdist
