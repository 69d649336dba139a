#pragma once

#include <algorithm>
#include <deque>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "rsmdist/rsm.hpp"

namespace rsmdist {

using Mark = std::int32_t;
using StateId = std::int32_t;
using TransId = std::int32_t;

inline constexpr BoxId kEpsilonLabel = -1;

struct AutState {
  NodeId node;
  Mark mark;

  friend bool operator==(const AutState&, const AutState&) = default;
};

struct AutTransition {
  StateId from;
  BoxId label;  // kEpsilonLabel or a box id
  StateId to;
  Weight weight;
};

/// Weighted automaton over (node, mark) states whose accepted language is a
/// regular set of configurations. Reading the box labels along a run spells a
/// stack; the run weight extends transition weights in reverse order. Every
/// entry state carries an implicit epsilon self-loop of weight one, which is
/// never stored.
class ConfigAutomaton {
 public:
  explicit ConfigAutomaton(Semiring sem) : semiring_(std::move(sem)) {}

  const Semiring& semiring() const { return semiring_; }

  StateId state(NodeId node, Mark mark) {
    auto key = state_key(node, mark);
    auto [it, fresh] = state_index_.try_emplace(key, static_cast<StateId>(states_.size()));
    if (fresh) {
      states_.push_back({node, mark});
      initial_.push_back(0);
      final_.push_back(0);
      out_eps_.emplace_back();
      out_box_.emplace_back();
      mark_count_ = std::max(mark_count_, mark + 1);
    }
    return it->second;
  }

  std::optional<StateId> find_state(NodeId node, Mark mark) const {
    auto it = state_index_.find(state_key(node, mark));
    return it == state_index_.end() ? std::nullopt : std::optional(it->second);
  }

  const AutState& state_info(StateId s) const { return states_[s]; }
  int state_count() const { return static_cast<int>(states_.size()); }

  /// Number of distinct marks; input automata use 0..mark_count()-1 and a
  /// saturation run adds one fresh mark on top.
  Mark mark_count() const { return mark_count_; }

  void set_initial(StateId s, bool v = true) { initial_[s] = v; }
  void set_final(StateId s, bool v = true) { final_[s] = v; }
  bool is_initial(StateId s) const { return initial_[s]; }
  bool is_final(StateId s) const { return final_[s]; }

  int transition_count() const { return static_cast<int>(transitions_.size()); }
  const AutTransition& transition(TransId t) const { return transitions_[t]; }

  std::optional<TransId> find_transition(StateId from, BoxId label, StateId to) const {
    auto it = transition_index_.find(transition_key(from, label, to));
    return it == transition_index_.end() ? std::nullopt : std::optional(it->second);
  }

  /// Creates the transition if absent (with the given weight), else returns
  /// the existing id untouched.
  TransId ensure_transition(StateId from, BoxId label, StateId to, Weight w) {
    auto key = transition_key(from, label, to);
    auto [it, fresh] = transition_index_.try_emplace(key, static_cast<TransId>(transitions_.size()));
    if (fresh) {
      transitions_.push_back({from, label, to, w});
      if (label == kEpsilonLabel)
        out_eps_[from].push_back(it->second);
      else
        out_box_[from].push_back(it->second);
    }
    return it->second;
  }

  void set_weight(TransId t, Weight w) { transitions_[t].weight = std::move(w); }

  std::span<const TransId> out_eps(StateId s) const { return out_eps_[s]; }
  std::span<const TransId> out_box(StateId s) const { return out_box_[s]; }

  std::vector<StateId> initial_states() const {
    std::vector<StateId> result;
    for (StateId s = 0; s < state_count(); ++s)
      if (initial_[s]) result.push_back(s);
    return result;
  }

  std::vector<StateId> final_states() const {
    std::vector<StateId> result;
    for (StateId s = 0; s < state_count(); ++s)
      if (final_[s]) result.push_back(s);
    return result;
  }

 private:
  static std::uint64_t state_key(NodeId node, Mark mark) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(node)) << 32) |
           static_cast<std::uint32_t>(mark);
  }
  struct TransKey {
    StateId from;
    BoxId label;
    StateId to;
    friend bool operator==(const TransKey&, const TransKey&) = default;
  };
  struct TransKeyHash {
    std::size_t operator()(const TransKey& k) const {
      std::uint64_t h = static_cast<std::uint32_t>(k.from);
      h = h * 1000003u ^ static_cast<std::uint32_t>(k.label + 1);
      h = h * 1000003u ^ static_cast<std::uint32_t>(k.to);
      return std::hash<std::uint64_t>()(h);
    }
  };
  static TransKey transition_key(StateId from, BoxId label, StateId to) {
    return {from, label, to};
  }

  Semiring semiring_;
  std::vector<AutState> states_;
  std::vector<char> initial_, final_;
  std::vector<AutTransition> transitions_;
  std::vector<std::vector<TransId>> out_eps_, out_box_;
  std::unordered_map<std::uint64_t, StateId> state_index_;
  std::unordered_map<TransKey, TransId, TransKeyHash> transition_index_;
  Mark mark_count_ = 0;
};

namespace detail {

/// Appends one chain accepting exactly `c`, using marks mark_base .. and
/// returning the next free mark. The chain is an epsilon hop into an entry of
/// the node's module followed by one b-transition per stack element.
inline Mark add_config_chain(ConfigAutomaton& aut, const Rsm& rsm, const Configuration& c,
                             Mark mark_base) {
  if (!rsm.well_formed(c)) throw std::invalid_argument("ill-formed configuration");
  const Semiring& sem = rsm.semiring();
  auto first_entry = [&rsm](ModuleId m) {
    if (rsm.entries(m).empty())
      throw std::invalid_argument("module '" + rsm.module_name(m) +
                                  "' has no entries; configuration not representable");
    return rsm.entries(m)[0];
  };

  StateId start = aut.state(c.node, mark_base);
  aut.set_initial(start);
  StateId at;
  if (rsm.node(c.node).kind == NodeKind::entry) {
    at = start;  // the implicit self-loop covers the leading epsilon
  } else {
    at = aut.state(first_entry(rsm.node(c.node).module), mark_base);
    aut.ensure_transition(start, kEpsilonLabel, at, sem.one());
  }
  Mark next = mark_base + 1;
  for (BoxId b : c.stack) {
    StateId target = aut.state(first_entry(rsm.box(b).module), next++);
    aut.ensure_transition(at, b, target, sem.one());
    at = target;
  }
  aut.set_final(at);
  return next;
}

}  // namespace detail

/// Automaton with L = {c}; all transition weights are one.
inline ConfigAutomaton singleton_automaton(const Rsm& rsm, const Configuration& c) {
  ConfigAutomaton aut(rsm.semiring());
  detail::add_config_chain(aut, rsm, c, 0);
  return aut;
}

/// Automaton accepting exactly the given configurations (weights one). Each
/// configuration gets its own mark range, so languages do not interfere.
inline ConfigAutomaton configs_automaton(const Rsm& rsm,
                                         const std::vector<Configuration>& configs) {
  ConfigAutomaton aut(rsm.semiring());
  Mark next = 0;
  for (const Configuration& c : configs) next = detail::add_config_chain(aut, rsm, c, next);
  return aut;
}

/// Automaton with L = { <e, empty> : e entry of the module }.
inline ConfigAutomaton entries_automaton(const Rsm& rsm, ModuleId module) {
  if (module < 0 || module >= rsm.module_count())
    throw std::invalid_argument("module index out of range");
  ConfigAutomaton aut(rsm.semiring());
  for (NodeId e : rsm.entries(module)) {
    StateId s = aut.state(e, 0);
    aut.set_initial(s);
    aut.set_final(s);
  }
  return aut;
}

/// Automaton accepting every entry of every module with the empty stack.
inline ConfigAutomaton entries_automaton(const Rsm& rsm) {
  ConfigAutomaton aut(rsm.semiring());
  for (ModuleId m = 0; m < rsm.module_count(); ++m)
    for (NodeId e : rsm.entries(m)) {
      StateId s = aut.state(e, 0);
      aut.set_initial(s);
      aut.set_final(s);
    }
  return aut;
}

/// The weight the automaton assigns to c: combine over all accepting runs
/// that start in an initial state holding c's node and spell c's stack,
/// weights extended in reverse run order. Computed by backward relaxation
/// over the (state, stack position) product.
inline Weight accept_weight(const ConfigAutomaton& aut, const Rsm& rsm,
                            const Configuration& c) {
  if (!rsm.well_formed(c)) throw std::invalid_argument("ill-formed configuration");
  const Semiring& sem = aut.semiring();
  const int positions = static_cast<int>(c.stack.size()) + 1;
  const int states = aut.state_count();

  std::vector<std::vector<TransId>> in_by_target(states);
  for (TransId t = 0; t < aut.transition_count(); ++t)
    in_by_target[aut.transition(t).to].push_back(t);

  std::vector<Weight> dist(static_cast<std::size_t>(states) * positions, sem.zero());
  std::vector<char> queued(dist.size(), 0);
  std::deque<int> worklist;
  auto cell = [&](StateId s, int pos) { return static_cast<std::size_t>(s) * positions + pos; };
  auto relax = [&](StateId s, int pos, const Weight& v) {
    std::size_t i = cell(s, pos);
    Weight next = sem.combine(dist[i], v);
    if (next == dist[i]) return;
    dist[i] = next;
    if (!queued[i]) {
      queued[i] = 1;
      worklist.push_back(static_cast<int>(i));
    }
  };

  for (StateId s = 0; s < states; ++s)
    if (aut.is_final(s)) relax(s, positions - 1, sem.one());

  while (!worklist.empty()) {
    int i = worklist.front();
    worklist.pop_front();
    queued[i] = 0;
    StateId target = static_cast<StateId>(i / positions);
    int pos = static_cast<int>(i % positions);
    Weight d = dist[i];
    for (TransId t : in_by_target[target]) {
      const AutTransition& tr = aut.transition(t);
      if (tr.label == kEpsilonLabel) {
        relax(tr.from, pos, sem.extend(d, tr.weight));
      } else if (pos > 0 && c.stack[pos - 1] == tr.label) {
        relax(tr.from, pos - 1, sem.extend(d, tr.weight));
      }
    }
  }

  Weight result = sem.zero();
  for (StateId s = 0; s < states; ++s)
    if (aut.is_initial(s) && aut.state_info(s).node == c.node)
      result = sem.combine(result, dist[cell(s, 0)]);
  return result;
}

/// True iff the automaton accepts at least one configuration, i.e. some final
/// state is reachable from an initial state through non-zero weights.
inline bool has_accepting_run(const ConfigAutomaton& aut) {
  const Semiring& sem = aut.semiring();
  std::vector<char> seen(aut.state_count(), 0);
  std::deque<StateId> queue;
  for (StateId s : aut.initial_states()) {
    seen[s] = 1;
    queue.push_back(s);
  }
  while (!queue.empty()) {
    StateId s = queue.front();
    queue.pop_front();
    if (aut.is_final(s)) return true;
    auto visit = [&](std::span<const TransId> ts) {
      for (TransId t : ts) {
        const AutTransition& tr = aut.transition(t);
        if (!seen[tr.to] && !sem.is_zero(tr.weight)) {
          seen[tr.to] = 1;
          queue.push_back(tr.to);
        }
      }
    };
    visit(aut.out_eps(s));
    visit(aut.out_box(s));
  }
  return false;
}

/// Syntactic well-formedness of states and transitions; when `fresh_mark` is
/// given (a saturation output), also the mark discipline: no transition may
/// switch from an old mark to the fresh mark, and final states stay old.
inline ValidationReport validate_shape(const ConfigAutomaton& aut, const Rsm& rsm,
                                       std::optional<Mark> fresh_mark = std::nullopt) {
  ValidationReport report;
  auto describe = [&rsm, &aut](StateId s) {
    const AutState& st = aut.state_info(s);
    return "(" + rsm.node(st.node).name + "," + std::to_string(st.mark) + ")";
  };

  for (StateId s = 0; s < aut.state_count(); ++s) {
    const AutState& st = aut.state_info(s);
    if (!rsm.valid_node(st.node)) {
      report.add("state " + std::to_string(s) + " holds an unknown node");
      continue;
    }
    NodeKind k = rsm.node(st.node).kind;
    if (k == NodeKind::exit || k == NodeKind::call)
      report.add("state " + describe(s) + " holds a " + std::string(to_string(k)) + " node");
    if (aut.is_final(s) && k != NodeKind::entry)
      report.add("final state " + describe(s) + " does not hold an entry node");
    if (fresh_mark && aut.is_final(s) && st.mark == *fresh_mark)
      report.add("final state " + describe(s) + " carries the fresh mark");
  }

  for (TransId t = 0; t < aut.transition_count(); ++t) {
    const AutTransition& tr = aut.transition(t);
    const AutState& from = aut.state_info(tr.from);
    const AutState& to = aut.state_info(tr.to);
    if (!rsm.valid_node(from.node) || !rsm.valid_node(to.node)) continue;
    std::string where = "transition " + describe(tr.from) + " -> " + describe(tr.to);
    if (tr.label == kEpsilonLabel) {
      if (rsm.node(to.node).kind != NodeKind::entry)
        report.add(where + ": epsilon target is not an entry state");
      else if (rsm.node(from.node).module != rsm.node(to.node).module)
        report.add(where + ": epsilon transition crosses modules");
      NodeKind k = rsm.node(from.node).kind;
      if (k != NodeKind::internal && k != NodeKind::ret && from.node != to.node)
        report.add(where + ": epsilon source must be internal, return, or the target node");
    } else {
      if (!rsm.valid_box(tr.label)) {
        report.add(where + ": unknown box label");
        continue;
      }
      const BoxInfo& box = rsm.box(tr.label);
      const NodeInfo& src = rsm.node(from.node);
      const NodeInfo& dst = rsm.node(to.node);
      if (src.kind != NodeKind::entry || src.module != box.callee)
        report.add(where + ": box source is not an entry of the callee");
      if (dst.kind != NodeKind::entry || dst.module != box.module)
        report.add(where + ": box target is not an entry of the box's module");
    }
    if (fresh_mark && from.mark != *fresh_mark && to.mark == *fresh_mark)
      report.add(where + ": switches from an old mark to the fresh mark");
  }
  return report;
}

/// Deterministic DOT rendering: states sorted by (node, mark), transitions by
/// (source, label, target). Final states are drawn doublecircle.
inline std::string dot_export(const ConfigAutomaton& aut, const Rsm& rsm) {
  std::vector<StateId> order(aut.state_count());
  for (StateId s = 0; s < aut.state_count(); ++s) order[s] = s;
  std::sort(order.begin(), order.end(), [&aut](StateId a, StateId b) {
    const AutState& x = aut.state_info(a);
    const AutState& y = aut.state_info(b);
    return std::tie(x.node, x.mark) < std::tie(y.node, y.mark);
  });

  auto label = [&](StateId s) {
    const AutState& st = aut.state_info(s);
    return rsm.node(st.node).name + "," + std::to_string(st.mark);
  };

  std::ostringstream out;
  out << "digraph config_automaton {\n  rankdir=LR;\n";
  for (StateId s : order) {
    out << "  \"" << label(s) << "\" [shape=" << (aut.is_final(s) ? "doublecircle" : "circle");
    if (aut.is_initial(s)) out << ", style=bold";
    out << "];\n";
  }
  struct Edge {
    std::string from, text, to;
  };
  std::vector<Edge> edges;
  for (TransId t = 0; t < aut.transition_count(); ++t) {
    const AutTransition& tr = aut.transition(t);
    std::string name = tr.label == kEpsilonLabel ? "eps" : rsm.box(tr.label).name;
    edges.push_back({label(tr.from), name + "/" + aut.semiring().to_string(tr.weight),
                     label(tr.to)});
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.from, a.text, a.to) < std::tie(b.from, b.text, b.to);
  });
  for (const Edge& e : edges)
    out << "  \"" << e.from << "\" -> \"" << e.to << "\" [label=\"" << e.text << "\"];\n";
  out << "}\n";
  return out.str();
}

}  // namespace rsmdist
