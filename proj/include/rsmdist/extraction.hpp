#pragma once

#include <deque>
#include <map>
#include <unordered_map>
#include <vector>

#include "rsmdist/automaton.hpp"
#include "rsmdist/post_star.hpp"
#include "rsmdist/rsm.hpp"

namespace rsmdist {

struct QueryStats {
  std::uint64_t combines = 0;
  std::uint64_t extends = 0;
  std::uint64_t ops() const { return combines + extends; }
};

namespace detail {

using Frontier = std::map<StateId, Weight>;

inline void frontier_relax(Frontier& f, StateId s, const Weight& v, const Semiring& sem,
                           QueryStats* stats) {
  auto [it, fresh] = f.try_emplace(s, v);
  if (fresh) return;
  if (stats) ++stats->combines;
  it->second = sem.combine(it->second, v);
}

/// Propagates the frontier across epsilon transitions to a fixpoint. Stored
/// epsilon transitions leave internal/return states (plus same-node hops), so
/// this is cheap; implicit entry self-loops are identity and skipped.
template <typename EpsOut>
void eps_closure(Frontier& f, const Semiring& sem, EpsOut&& eps_out, QueryStats* stats) {
  std::deque<StateId> pending;
  for (const auto& [s, w] : f) pending.push_back(s);
  while (!pending.empty()) {
    StateId s = pending.front();
    pending.pop_front();
    Weight w = f.at(s);
    for (const auto& [to, tw] : eps_out(s)) {
      if (stats) ++stats->extends;
      Weight v = sem.extend(tw, w);
      if (sem.is_zero(v)) continue;
      auto it = f.find(to);
      if (it == f.end()) {
        f.emplace(to, v);
        pending.push_back(to);
      } else {
        if (stats) ++stats->combines;
        Weight next = sem.combine(it->second, v);
        if (next != it->second) {
          it->second = next;
          pending.push_back(to);
        }
      }
    }
  }
}

}  // namespace detail

/// One left-to-right pass over the stack: seed the frontier at the initial
/// states holding c's node, fold each stack box through its labeled
/// transitions, and finish by combining over final states. Agrees with
/// accept_weight on frozen automata.
inline Weight config_distance(const ConfigAutomaton& aut, const Rsm& rsm,
                              const Configuration& c, QueryStats* stats = nullptr) {
  if (!rsm.well_formed(c)) throw std::invalid_argument("ill-formed configuration");
  const Semiring& sem = aut.semiring();

  detail::Frontier frontier;
  for (StateId s = 0; s < aut.state_count(); ++s)
    if (aut.is_initial(s) && aut.state_info(s).node == c.node)
      detail::frontier_relax(frontier, s, sem.one(), sem, stats);

  auto eps_out = [&aut](StateId s) {
    std::vector<std::pair<StateId, Weight>> result;
    for (TransId t : aut.out_eps(s)) {
      const AutTransition& tr = aut.transition(t);
      result.push_back({tr.to, tr.weight});
    }
    return result;
  };
  detail::eps_closure(frontier, sem, eps_out, stats);

  for (BoxId b : c.stack) {
    detail::Frontier next;
    for (const auto& [s, w] : frontier) {
      for (TransId t : aut.out_box(s)) {
        const AutTransition& tr = aut.transition(t);
        if (tr.label != b) continue;
        if (stats) ++stats->extends;
        Weight v = sem.extend(tr.weight, w);
        if (!sem.is_zero(v)) detail::frontier_relax(next, tr.to, v, sem, stats);
      }
    }
    frontier = std::move(next);
    detail::eps_closure(frontier, sem, eps_out, stats);
  }

  Weight result = sem.zero();
  for (const auto& [s, w] : frontier)
    if (aut.is_final(s)) {
      if (stats) ++stats->combines;
      result = sem.combine(result, w);
    }
  return result;
}

/// The saturated automaton relabeled with modules instead of boxes: parallel
/// box transitions between the same states collapse into one transition
/// labeled with the module owning the boxes, weights combined. Epsilon
/// transitions are kept for the leading hop of a query.
class ModuleAutomaton {
 public:
  ModuleAutomaton(const ConfigAutomaton& base, const Rsm& rsm)
      : semiring_(base.semiring()), states_(base.state_count()) {
    for (StateId s = 0; s < base.state_count(); ++s) {
      states_[s] = base.state_info(s);
      if (base.is_initial(s)) initial_.push_back(s);
      if (base.is_final(s)) final_.push_back(s);
    }
    out_eps_.resize(states_.size());
    out_module_.resize(states_.size());
    std::map<std::tuple<StateId, ModuleId, StateId>, Weight> merged;
    for (TransId t = 0; t < base.transition_count(); ++t) {
      const AutTransition& tr = base.transition(t);
      if (tr.label == kEpsilonLabel) {
        out_eps_[tr.from].push_back({tr.to, tr.weight});
        continue;
      }
      ModuleId label = rsm.box(tr.label).module;  // the module of the target entry
      auto key = std::make_tuple(tr.from, label, tr.to);
      auto [it, fresh] = merged.try_emplace(key, tr.weight);
      if (!fresh) it->second = semiring_.combine(it->second, tr.weight);
    }
    for (const auto& [key, w] : merged) {
      auto [from, label, to] = key;
      out_module_[from].push_back({label, to, w});
    }
  }

  const Semiring& semiring() const { return semiring_; }
  int state_count() const { return static_cast<int>(states_.size()); }
  const AutState& state_info(StateId s) const { return states_[s]; }
  const std::vector<StateId>& initial_states() const { return initial_; }
  const std::vector<StateId>& final_states() const { return final_; }

  struct ModuleEdge {
    ModuleId label;
    StateId to;
    Weight weight;
  };
  const std::vector<ModuleEdge>& out_module(StateId s) const { return out_module_[s]; }
  const std::vector<std::pair<StateId, Weight>>& out_eps(StateId s) const {
    return out_eps_[s];
  }

 private:
  Semiring semiring_;
  std::vector<AutState> states_;
  std::vector<StateId> initial_, final_;
  std::vector<std::vector<std::pair<StateId, Weight>>> out_eps_;
  std::vector<std::vector<ModuleEdge>> out_module_;
};

inline ModuleAutomaton superconfig_automaton(const ConfigAutomaton& apost, const Rsm& rsm) {
  return ModuleAutomaton(apost, rsm);
}

namespace detail {

inline Weight superconfig_finish(const ModuleAutomaton& maut, const Frontier& frontier,
                                 QueryStats* stats) {
  const Semiring& sem = maut.semiring();
  Weight result = sem.zero();
  for (StateId s : maut.final_states()) {
    auto it = frontier.find(s);
    if (it == frontier.end()) continue;
    if (stats) ++stats->combines;
    result = sem.combine(result, it->second);
  }
  return result;
}

inline Frontier superconfig_start(const ModuleAutomaton& maut, NodeId node,
                                  QueryStats* stats) {
  const Semiring& sem = maut.semiring();
  Frontier frontier;
  for (StateId s : maut.initial_states())
    if (maut.state_info(s).node == node) frontier_relax(frontier, s, sem.one(), sem, stats);
  auto eps_out = [&maut](StateId s) -> const std::vector<std::pair<StateId, Weight>>& {
    return maut.out_eps(s);
  };
  eps_closure(frontier, sem, eps_out, stats);
  return frontier;
}

inline void superconfig_step(const ModuleAutomaton& maut, Frontier& frontier, ModuleId label,
                             QueryStats* stats) {
  const Semiring& sem = maut.semiring();
  Frontier next;
  for (const auto& [s, w] : frontier) {
    for (const auto& edge : maut.out_module(s)) {
      if (edge.label != label) continue;
      if (stats) ++stats->extends;
      Weight v = sem.extend(edge.weight, w);
      if (!sem.is_zero(v)) frontier_relax(next, edge.to, v, sem, stats);
    }
  }
  frontier = std::move(next);
  auto eps_out = [&maut](StateId s) -> const std::vector<std::pair<StateId, Weight>>& {
    return maut.out_eps(s);
  };
  eps_closure(frontier, sem, eps_out, stats);
}

}  // namespace detail

/// Combine of config_distance over every stack refining the module sequence.
inline Weight superconfig_distance(const ModuleAutomaton& maut, const Rsm& rsm,
                                   const Superconfiguration& sc, QueryStats* stats = nullptr) {
  if (!rsm.valid_node(sc.node)) throw std::invalid_argument("unknown node in query");
  for (ModuleId m : sc.modules)
    if (m < 0 || m >= rsm.module_count()) throw std::invalid_argument("unknown module in query");
  detail::Frontier frontier = detail::superconfig_start(maut, sc.node, stats);
  for (ModuleId m : sc.modules) detail::superconfig_step(maut, frontier, m, stats);
  return detail::superconfig_finish(maut, frontier, stats);
}

/// Node distance for every node: distance to the node under any stack.
/// Solved as a single-source semiring distance problem on the reversed run
/// graph seeded at the final states; per-node lookups afterwards are O(1).
inline std::unordered_map<NodeId, Weight> node_distances(const ConfigAutomaton& aut,
                                                         const Rsm&) {
  const Semiring& sem = aut.semiring();
  std::vector<std::vector<TransId>> in_by_target(aut.state_count());
  for (TransId t = 0; t < aut.transition_count(); ++t)
    in_by_target[aut.transition(t).to].push_back(t);

  std::vector<Weight> dist(aut.state_count(), sem.zero());
  std::vector<char> queued(aut.state_count(), 0);
  std::deque<StateId> worklist;
  auto push = [&](StateId s) {
    if (!queued[s]) {
      queued[s] = 1;
      worklist.push_back(s);
    }
  };
  for (StateId s = 0; s < aut.state_count(); ++s)
    if (aut.is_final(s)) {
      dist[s] = sem.one();
      push(s);
    }
  while (!worklist.empty()) {
    StateId to = worklist.front();
    worklist.pop_front();
    queued[to] = 0;
    for (TransId t : in_by_target[to]) {
      const AutTransition& tr = aut.transition(t);
      Weight v = sem.extend(dist[to], tr.weight);
      Weight next = sem.combine(dist[tr.from], v);
      if (next != dist[tr.from]) {
        dist[tr.from] = next;
        push(tr.from);
      }
    }
  }

  std::unordered_map<NodeId, Weight> result;
  for (StateId s = 0; s < aut.state_count(); ++s) {
    if (!aut.is_initial(s) || sem.is_zero(dist[s])) continue;
    NodeId node = aut.state_info(s).node;
    auto [it, fresh] = result.try_emplace(node, dist[s]);
    if (!fresh) it->second = sem.combine(it->second, dist[s]);
  }
  return result;
}

/// Same-context distance for every (module, node): the combined weight of
/// computations from the module's entries to the node, both with empty stack.
/// One saturation from the union of all entry states; the fresh-mark epsilon
/// transitions into the final entry states carry exactly these values.
inline std::map<std::pair<ModuleId, NodeId>, Weight> same_context_distances(
    const Rsm& rsm, const PostStarOptions& options = {}) {
  const Semiring& sem = rsm.semiring();
  PostStarResult res = post_star(rsm, entries_automaton(rsm), options);
  const ConfigAutomaton& aut = res.automaton;

  std::map<std::pair<ModuleId, NodeId>, Weight> result;
  for (ModuleId m = 0; m < rsm.module_count(); ++m)
    for (NodeId e : rsm.entries(m)) result[{m, e}] = sem.one();  // empty computation

  for (TransId t = 0; t < aut.transition_count(); ++t) {
    const AutTransition& tr = aut.transition(t);
    if (tr.label != kEpsilonLabel) continue;
    if (aut.state_info(tr.from).mark != res.fresh_mark) continue;
    if (!aut.is_final(tr.to)) continue;
    NodeId u = aut.state_info(tr.from).node;
    auto [it, fresh] = result.try_emplace({rsm.node(u).module, u}, tr.weight);
    if (!fresh) it->second = sem.combine(it->second, tr.weight);
  }
  return result;
}

// -- sparse-machine block precomputation -------------------------------------

/// Matrix over entry states for one valid module sequence of length z+1;
/// entry (q, q') is the combined weight of label paths from q to q'.
using BlockMatrix = std::map<std::pair<StateId, StateId>, Weight>;

struct ModuleSeqHash {
  std::size_t operator()(const std::vector<ModuleId>& seq) const {
    std::size_t h = 14695981039346656037ull;
    for (ModuleId m : seq) h = (h ^ static_cast<std::size_t>(m + 1)) * 1099511628211ull;
    return h;
  }
};

struct BlockTable {
  int z = 1;
  std::unordered_map<std::vector<ModuleId>, BlockMatrix, ModuleSeqHash> blocks;
};

namespace detail {

inline BlockMatrix compose(const BlockMatrix& a, const BlockMatrix& b, const Semiring& sem) {
  std::map<StateId, std::vector<std::pair<StateId, Weight>>> b_rows;
  for (const auto& [key, w] : b) b_rows[key.first].push_back({key.second, w});
  BlockMatrix out;
  for (const auto& [key, wa] : a) {
    auto rows = b_rows.find(key.second);
    if (rows == b_rows.end()) continue;
    for (const auto& [to, wb] : rows->second) {
      Weight v = sem.extend(wb, wa);  // run weights extend in reverse order
      if (sem.is_zero(v)) continue;
      auto [it, fresh] = out.try_emplace({key.first, to}, v);
      if (!fresh) it->second = sem.combine(it->second, v);
    }
  }
  return out;
}

}  // namespace detail

/// Precomputes one matrix per valid (z+1)-module sequence, where adjacent
/// modules must be linked by a call (the later module owns a box invoking the
/// earlier one). Sequence count is bounded by modules * fanout^z and checked
/// against the budget before any matrix work.
inline BlockTable block_precompute(const ModuleAutomaton& maut, const Rsm& rsm, int z,
                                   std::uint64_t budget = 1 << 20) {
  if (z < 1) throw std::invalid_argument("block size must be positive");
  const Semiring& sem = maut.semiring();

  std::vector<std::vector<ModuleId>> callees(rsm.module_count());
  std::uint64_t fanout = 0;
  for (ModuleId m = 0; m < rsm.module_count(); ++m) {
    std::vector<char> seen(rsm.module_count(), 0);
    for (BoxId b : rsm.boxes(m)) {
      ModuleId callee = rsm.box(b).callee;
      if (callee >= 0 && callee < rsm.module_count() && !seen[callee]) {
        seen[callee] = 1;
        callees[m].push_back(callee);
      }
    }
    fanout = std::max<std::uint64_t>(fanout, callees[m].size());
  }
  std::uint64_t bound = rsm.module_count();
  for (int i = 0; i < z && bound <= budget; ++i)
    bound = fanout == 0 ? 0 : (bound > budget / std::max<std::uint64_t>(fanout, 1)
                                   ? budget + 1
                                   : bound * fanout);
  if (bound > budget)
    throw BudgetError("block precomputation would exceed the sequence budget");

  // Pair matrices: consuming label M' from entries of M.
  std::map<std::pair<ModuleId, ModuleId>, BlockMatrix> pair_matrix;
  for (StateId s = 0; s < maut.state_count(); ++s) {
    const NodeInfo& node = rsm.node(maut.state_info(s).node);
    if (node.kind != NodeKind::entry) continue;
    for (const auto& edge : maut.out_module(s)) {
      auto& mat = pair_matrix[{node.module, edge.label}];
      auto [it, fresh] = mat.try_emplace({s, edge.to}, edge.weight);
      if (!fresh) it->second = sem.combine(it->second, edge.weight);
    }
  }

  BlockTable table;
  table.z = z;
  // Valid sequences, enumerated back to front: each earlier module must be a
  // callee of its successor.
  std::vector<std::vector<ModuleId>> sequences;
  for (ModuleId last = 0; last < rsm.module_count(); ++last) {
    std::vector<std::vector<ModuleId>> suffixes{{last}};
    for (int len = 1; len <= z; ++len) {
      std::vector<std::vector<ModuleId>> grown;
      for (const auto& suffix : suffixes)
        for (ModuleId prev : callees[suffix.front()]) {
          std::vector<ModuleId> seq{prev};
          seq.insert(seq.end(), suffix.begin(), suffix.end());
          grown.push_back(std::move(seq));
        }
      suffixes = std::move(grown);
    }
    for (auto& seq : suffixes) sequences.push_back(std::move(seq));
    if (sequences.size() > budget)
      throw BudgetError("block precomputation exceeded the sequence budget");
  }

  for (const auto& seq : sequences) {
    BlockMatrix acc = pair_matrix[{seq[0], seq[1]}];
    for (int i = 1; i < z; ++i)
      acc = detail::compose(acc, pair_matrix[{seq[i], seq[i + 1]}], sem);
    table.blocks.emplace(seq, std::move(acc));
  }
  return table;
}

/// Same value as superconfig_distance, consuming the module stack in blocks
/// of z labels through the precomputed matrices. Sequences containing an
/// invalid adjacent pair have no refining stack and yield zero.
inline Weight superconfig_distance_blocked(const ModuleAutomaton& maut, const BlockTable& table,
                                           const Rsm& rsm, const Superconfiguration& sc,
                                           QueryStats* stats = nullptr) {
  if (static_cast<int>(sc.modules.size()) < table.z)
    return superconfig_distance(maut, rsm, sc, stats);
  const Semiring& sem = maut.semiring();

  detail::Frontier frontier = detail::superconfig_start(maut, sc.node, stats);
  ModuleId anchor = rsm.node(sc.node).module;
  std::size_t i = 0;
  while (sc.modules.size() - i >= static_cast<std::size_t>(table.z)) {
    std::vector<ModuleId> key{anchor};
    key.insert(key.end(), sc.modules.begin() + i, sc.modules.begin() + i + table.z);
    auto block = table.blocks.find(key);
    if (block == table.blocks.end()) return sem.zero();  // invalid adjacent pair
    detail::Frontier next;
    for (const auto& [s, w] : frontier) {
      auto lo = block->second.lower_bound({s, std::numeric_limits<StateId>::min()});
      for (auto it = lo; it != block->second.end() && it->first.first == s; ++it) {
        if (stats) ++stats->extends;
        Weight v = sem.extend(it->second, w);
        if (!sem.is_zero(v)) detail::frontier_relax(next, it->first.second, v, sem, stats);
      }
    }
    frontier = std::move(next);
    auto eps_out = [&maut](StateId s) -> const std::vector<std::pair<StateId, Weight>>& {
      return maut.out_eps(s);
    };
    detail::eps_closure(frontier, sem, eps_out, stats);
    i += table.z;
    anchor = sc.modules[i - 1];
  }
  for (; i < sc.modules.size(); ++i) detail::superconfig_step(maut, frontier, sc.modules[i], stats);
  return detail::superconfig_finish(maut, frontier, stats);
}

}  // namespace rsmdist
