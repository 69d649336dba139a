#pragma once

#include <deque>
#include <optional>
#include <unordered_map>
#include <vector>

#include "rsmdist/automaton.hpp"
#include "rsmdist/post_star.hpp"
#include "rsmdist/rsm.hpp"

namespace rsmdist {

/// One weighted pushdown rule <p, g> -> <p', w>, with |w| <= 2:
///   pop:  sym1 == sym2 == -1
///   swap: sym1 >= 0, sym2 == -1
///   push: sym1 is the new top, sym2 sits below it
struct WpdsRule {
  int from_control;
  int from_symbol;
  int to_control;
  int sym1 = -1;
  int sym2 = -1;
  Weight weight;
};

struct Wpds {
  Semiring semiring;
  int control_count = 0;
  int symbol_count = 0;
  std::vector<WpdsRule> rules;
  // rule indices by (control, top symbol)
  std::vector<std::vector<int>> rules_by_head;

  int head(int control, int symbol) const { return control * symbol_count + symbol; }
  const std::vector<int>& rules_for(int control, int symbol) const {
    return rules_by_head[head(control, symbol)];
  }
};

struct PdsConfig {
  int control;
  std::vector<int> word;
};

/// Correspondence between machine configurations and PDS configurations:
/// <u, b1..br> maps to <p_main, sym(u) sym(b1) .. sym(br)>.
struct RsmWpdsMap {
  int main_control = 0;
  std::vector<int> pop_control;  // by callee-exit local index
  std::vector<int> node_symbol;  // -1 for nodes that never appear on the stack
  std::vector<int> box_symbol;

  PdsConfig to_pds(const Configuration& c) const {
    PdsConfig pc{main_control, {}};
    pc.word.reserve(c.stack.size() + 1);
    pc.word.push_back(node_symbol[c.node]);
    for (BoxId b : c.stack) pc.word.push_back(box_symbol[b]);
    return pc;
  }
};

/// Linear-size translation: internal transitions become swaps, calls become
/// pushes, transitions into an exit pop into a control state remembering the
/// exit's index, and one swap per (box, callee exit) completes the return.
inline std::pair<Wpds, RsmWpdsMap> rsm_to_wpds(const Rsm& rsm) {
  RsmWpdsMap map;
  map.node_symbol.assign(rsm.node_count(), -1);
  map.box_symbol.assign(rsm.box_count(), -1);
  int next_symbol = 0;
  for (NodeId n = 0; n < rsm.node_count(); ++n) {
    NodeKind k = rsm.node(n).kind;
    if (k == NodeKind::internal || k == NodeKind::entry || k == NodeKind::ret)
      map.node_symbol[n] = next_symbol++;
  }
  for (BoxId b = 0; b < rsm.box_count(); ++b) map.box_symbol[b] = next_symbol++;

  Wpds pds{rsm.semiring(), 1 + rsm.exit_bound(), next_symbol, {}, {}};
  map.pop_control.resize(rsm.exit_bound());
  for (int i = 0; i < rsm.exit_bound(); ++i) map.pop_control[i] = 1 + i;

  for (NodeId n = 0; n < rsm.node_count(); ++n) {
    if (map.node_symbol[n] < 0) continue;
    for (const OutEdge& edge : rsm.out(n)) {
      const NodeInfo& target = rsm.node(edge.to);
      switch (target.kind) {
        case NodeKind::internal:
          pds.rules.push_back({map.main_control, map.node_symbol[n], map.main_control,
                               map.node_symbol[edge.to], -1, edge.weight});
          break;
        case NodeKind::call:
          pds.rules.push_back({map.main_control, map.node_symbol[n], map.main_control,
                               map.node_symbol[target.peer], map.box_symbol[target.box],
                               edge.weight});
          break;
        case NodeKind::exit:
          pds.rules.push_back({map.main_control, map.node_symbol[n],
                               map.pop_control[target.local_index], -1, -1, edge.weight});
          break;
        default:
          break;
      }
    }
  }
  for (BoxId b = 0; b < rsm.box_count(); ++b) {
    ModuleId callee = rsm.box(b).callee;
    if (callee < 0 || callee >= rsm.module_count()) continue;
    for (NodeId x : rsm.exits(callee)) {
      NodeId ret = rsm.return_node(b, x);
      pds.rules.push_back({map.pop_control[rsm.node(x).local_index], map.box_symbol[b],
                           map.main_control, map.node_symbol[ret], -1, rsm.semiring().one()});
    }
  }

  pds.rules_by_head.assign(static_cast<std::size_t>(pds.control_count) * pds.symbol_count, {});
  for (int i = 0; i < static_cast<int>(pds.rules.size()); ++i)
    pds.rules_by_head[pds.head(pds.rules[i].from_control, pds.rules[i].from_symbol)].push_back(i);
  return {std::move(pds), std::move(map)};
}

/// Weighted automaton over stack symbols representing regular sets of PDS
/// configurations. States 0..control_count-1 are the PDS controls; a word is
/// accepted from its control state, path weights extend in reverse order.
class PAutomaton {
 public:
  struct Transition {
    int from;
    int symbol;  // -1 for epsilon
    int to;
    Weight weight;
  };

  explicit PAutomaton(Semiring sem, int control_count)
      : semiring_(std::move(sem)), control_count_(control_count) {
    for (int i = 0; i < control_count; ++i) add_state();
  }

  const Semiring& semiring() const { return semiring_; }
  int control_count() const { return control_count_; }
  int state_count() const { return static_cast<int>(out_sym_.size()); }

  int add_state() {
    out_sym_.emplace_back();
    out_eps_.emplace_back();
    in_eps_.emplace_back();
    final_.push_back(0);
    return state_count() - 1;
  }

  void set_final(int s, bool v = true) { final_[s] = v; }
  bool is_final(int s) const { return final_[s]; }

  int transition_count() const { return static_cast<int>(transitions_.size()); }
  const Transition& transition(int t) const { return transitions_[t]; }
  void set_weight(int t, Weight w) { transitions_[t].weight = std::move(w); }

  std::optional<int> find_transition(int from, int symbol, int to) const {
    auto it = index_.find(key(from, symbol, to));
    return it == index_.end() ? std::nullopt : std::optional(it->second);
  }

  int ensure_transition(int from, int symbol, int to, Weight w) {
    auto [it, fresh] = index_.try_emplace(key(from, symbol, to), transition_count());
    if (fresh) {
      transitions_.push_back({from, symbol, to, std::move(w)});
      if (symbol < 0) {
        out_eps_[from].push_back(it->second);
        in_eps_[to].push_back(it->second);
      } else {
        out_sym_[from].push_back(it->second);
      }
    }
    return it->second;
  }

  const std::vector<int>& out_sym(int s) const { return out_sym_[s]; }
  const std::vector<int>& out_eps(int s) const { return out_eps_[s]; }
  const std::vector<int>& in_eps(int s) const { return in_eps_[s]; }

 private:
  static std::uint64_t key(int from, int symbol, int to) {
    std::uint64_t h = static_cast<std::uint32_t>(from);
    h = h * 1000003u ^ static_cast<std::uint32_t>(symbol + 1);
    h = h * 1000003u ^ static_cast<std::uint32_t>(to);
    return h;
  }

  Semiring semiring_;
  int control_count_;
  std::vector<Transition> transitions_;
  std::vector<std::vector<int>> out_sym_, out_eps_, in_eps_;
  std::vector<char> final_;
  std::unordered_map<std::uint64_t, int> index_;
};

/// Encodes the language of a configuration automaton as a P-automaton: the
/// machine run start state (u, m) is reached from p_main by reading u, and
/// the automaton's own transitions are mirrored one-to-one.
inline PAutomaton p_automaton_from(const Wpds& pds, const RsmWpdsMap& map,
                                   const ConfigAutomaton& aut, const Rsm&) {
  PAutomaton pa(pds.semiring, pds.control_count);
  Weight one = pds.semiring.one();
  std::vector<int> mapped(aut.state_count());
  for (StateId s = 0; s < aut.state_count(); ++s) mapped[s] = pa.add_state();
  for (StateId s = 0; s < aut.state_count(); ++s) {
    if (aut.is_initial(s))
      pa.ensure_transition(map.main_control, map.node_symbol[aut.state_info(s).node],
                           mapped[s], one);
    if (aut.is_final(s)) pa.set_final(mapped[s]);
  }
  for (TransId t = 0; t < aut.transition_count(); ++t) {
    const AutTransition& tr = aut.transition(t);
    int symbol = tr.label == kEpsilonLabel ? -1 : map.box_symbol[tr.label];
    pa.ensure_transition(mapped[tr.from], symbol, mapped[tr.to], tr.weight);
  }
  return pa;
}

/// Textbook weighted post* saturation over the P-automaton, with the usual
/// mid-state per push head and epsilon contraction. No entry-to-exit
/// summaries: this is the comparison baseline.
inline PAutomaton wpds_post_star(const Wpds& pds, const PAutomaton& input,
                                 PostStarStats* stats_out = nullptr,
                                 const PostStarOptions& options = {}) {
  const Semiring& sem = pds.semiring;
  PAutomaton pa = input;
  PostStarStats stats;
  stats.dcc_only = !sem.height_bound().has_value();

  std::deque<int> worklist;
  std::vector<char> queued(pa.transition_count(), 0);
  std::vector<std::uint64_t> drops(pa.transition_count(), 0);
  std::unordered_map<std::uint64_t, int> mid_states;

  auto enqueue = [&](int t) {
    if (static_cast<std::size_t>(t) >= queued.size()) queued.resize(t + 1, 0);
    if (queued[t]) return;
    queued[t] = 1;
    worklist.push_back(t);
  };
  auto relax = [&](int from, int symbol, int to, const Weight& v) {
    ++stats.relax_calls;
    if (sem.is_zero(v)) return;
    int t;
    if (auto existing = pa.find_transition(from, symbol, to)) {
      ++stats.combines;
      Weight updated = sem.combine(pa.transition(*existing).weight, v);
      if (updated == pa.transition(*existing).weight) return;
      pa.set_weight(*existing, updated);
      t = *existing;
    } else {
      t = pa.ensure_transition(from, symbol, to, v);
    }
    ++stats.relax_changes;
    if (static_cast<std::size_t>(t) >= drops.size()) drops.resize(t + 1, 0);
    std::uint64_t count = ++drops[t];
    stats.max_relax_per_transition = std::max(stats.max_relax_per_transition, count);
    if (count > options.relax_cap)
      throw NonTerminationError("pushdown post* exceeded its relaxation cap");
    enqueue(t);
  };
  auto ext = [&](const Weight& a, const Weight& b) {
    ++stats.extends;
    return sem.extend(a, b);
  };
  auto mid_state = [&](int control, int symbol) {
    std::uint64_t key = (static_cast<std::uint64_t>(control) << 32) |
                        static_cast<std::uint32_t>(symbol);
    auto [it, fresh] = mid_states.try_emplace(key, -1);
    if (fresh) it->second = pa.add_state();
    return it->second;
  };

  for (int t = 0; t < pa.transition_count(); ++t) enqueue(t);

  while (!worklist.empty()) {
    int t = worklist.front();
    worklist.pop_front();
    queued[t] = 0;
    const PAutomaton::Transition tr = pa.transition(t);

    if (tr.symbol < 0) {
      // epsilon (p', q): combine with every symbol transition leaving q
      std::vector<int> outgoing = pa.out_sym(tr.to);
      for (int t2 : outgoing) {
        const PAutomaton::Transition next = pa.transition(t2);
        relax(tr.from, next.symbol, next.to, ext(next.weight, tr.weight));
      }
      continue;
    }

    if (tr.from >= pds.control_count) continue;
    for (int ri : pds.rules_for(tr.from, tr.symbol)) {
      const WpdsRule& rule = pds.rules[ri];
      Weight pushed = ext(tr.weight, rule.weight);
      if (rule.sym1 < 0) {
        relax(rule.to_control, -1, tr.to, pushed);
        // the popped-into state is skipped over right away, once per firing
        // as in the classical formulation
        std::vector<int> outgoing = pa.out_sym(tr.to);
        for (int t2 : outgoing) {
          const PAutomaton::Transition next = pa.transition(t2);
          relax(rule.to_control, next.symbol, next.to, ext(next.weight, pushed));
        }
      } else if (rule.sym2 < 0) {
        relax(rule.to_control, rule.sym1, tr.to, pushed);
      } else {
        int mid = mid_state(rule.to_control, rule.sym1);
        relax(rule.to_control, rule.sym1, mid, sem.one());
        relax(mid, rule.sym2, tr.to, pushed);
        // every epsilon into the mid state rides the new tail, re-examined
        // on each firing of the rule as in the classical formulation
        std::vector<int> incoming = pa.in_eps(mid);
        for (int t2 : incoming) {
          const PAutomaton::Transition eps = pa.transition(t2);
          relax(eps.from, rule.sym2, tr.to, ext(pushed, eps.weight));
        }
      }
    }
  }

  if (stats_out) *stats_out = stats;
  return pa;
}

/// Accepted weight of a PDS configuration: combine over paths from the
/// configuration's control state spelling its word into a final state,
/// extending transition weights in reverse order, epsilon moves free.
inline Weight pds_accept_weight(const PAutomaton& pa, const PdsConfig& c) {
  const Semiring& sem = pa.semiring();
  std::map<int, Weight> frontier{{c.control, sem.one()}};

  auto closure = [&](std::map<int, Weight>& f) {
    std::deque<int> pending;
    for (const auto& [s, w] : f) pending.push_back(s);
    while (!pending.empty()) {
      int s = pending.front();
      pending.pop_front();
      Weight w = f.at(s);
      for (int t : pa.out_eps(s)) {
        const PAutomaton::Transition& tr = pa.transition(t);
        Weight v = sem.extend(tr.weight, w);
        if (sem.is_zero(v)) continue;
        auto it = f.find(tr.to);
        if (it == f.end()) {
          f.emplace(tr.to, v);
          pending.push_back(tr.to);
        } else {
          Weight next = sem.combine(it->second, v);
          if (next != it->second) {
            it->second = next;
            pending.push_back(tr.to);
          }
        }
      }
    }
  };

  closure(frontier);
  for (int symbol : c.word) {
    std::map<int, Weight> next;
    for (const auto& [s, w] : frontier) {
      for (int t : pa.out_sym(s)) {
        const PAutomaton::Transition& tr = pa.transition(t);
        if (tr.symbol != symbol) continue;
        Weight v = sem.extend(tr.weight, w);
        if (sem.is_zero(v)) continue;
        auto [it, fresh] = next.try_emplace(tr.to, v);
        if (!fresh) it->second = sem.combine(it->second, v);
      }
    }
    frontier = std::move(next);
    closure(frontier);
  }

  Weight result = sem.zero();
  for (const auto& [s, w] : frontier)
    if (pa.is_final(s)) result = sem.combine(result, w);
  return result;
}

}  // namespace rsmdist
