#pragma once

#include <deque>
#include <map>
#include <tuple>
#include <vector>

#include "rsmdist/automaton.hpp"
#include "rsmdist/rsm.hpp"

namespace rsmdist {

struct PostStarOptions {
  // Strict weight decreases allowed per transition before the run is aborted
  // with a non-termination diagnostic. Guards against semirings that do not
  // actually satisfy the descending chain condition.
  std::uint64_t relax_cap = 1'000'000;
};

struct PostStarStats {
  std::uint64_t relax_calls = 0;
  std::uint64_t relax_changes = 0;
  std::uint64_t combines = 0;
  std::uint64_t extends = 0;
  std::uint64_t max_relax_per_transition = 0;
  bool dcc_only = false;  // semiring declared no finite height bound
};

/// Entry-to-exit summary weights keyed by ((entry node, mark), exit node).
/// Values only decrease in the canonical order while the saturation runs.
/// Fresh-mark keys hold genuine same-context entry-to-exit distances; keys
/// with input marks are kept to avoid redundant work.
class SummaryTable {
 public:
  using Key = std::tuple<NodeId, Mark, NodeId>;

  Weight at(NodeId entry, Mark mark, NodeId exit, const Semiring& sem) const {
    auto it = table_.find({entry, mark, exit});
    return it == table_.end() ? sem.zero() : it->second;
  }

  const std::map<Key, Weight>& all() const { return table_; }

  void put(NodeId entry, Mark mark, NodeId exit, Weight w) {
    table_[{entry, mark, exit}] = std::move(w);
  }

 private:
  std::map<Key, Weight> table_;
};

struct PostStarResult {
  ConfigAutomaton automaton;
  SummaryTable summaries;
  Mark fresh_mark = 0;
  PostStarStats stats;
};

namespace detail {

class PostStarEngine {
 public:
  PostStarEngine(const Rsm& rsm, const ConfigAutomaton& input, const PostStarOptions& options)
      : rsm_(rsm), options_(options), aut_(input), fresh_(input.mark_count()) {}

  PostStarResult run() {
    check_preconditions();
    stats_.dcc_only = !rsm_.semiring().height_bound().has_value();
    relax_counts_.assign(aut_.transition_count(), 0);
    in_worklist_.assign(aut_.transition_count(), 0);
    selfloop_added_.assign(aut_.state_count(), 0);

    // Seed: every epsilon transition leaving an initial state, where the
    // implicit self-loops of initial entry states count as such transitions.
    for (StateId s = 0; s < aut_.state_count(); ++s) {
      if (!aut_.is_initial(s)) continue;
      if (rsm_.node(aut_.state_info(s).node).kind == NodeKind::entry) enqueue_selfloop(s);
    }
    for (TransId t = 0; t < aut_.transition_count(); ++t) {
      const AutTransition& tr = aut_.transition(t);
      if (tr.label == kEpsilonLabel && aut_.is_initial(tr.from)) enqueue(t);
    }

    while (!worklist_.empty()) {
      std::int64_t item = worklist_.front();
      worklist_.pop_front();
      if (item < 0) {
        StateId s = static_cast<StateId>(-item - 1);
        process_eps(s, s, rsm_.semiring().one());
      } else {
        TransId t = static_cast<TransId>(item);
        in_worklist_[t] = 0;
        const AutTransition tr = aut_.transition(t);
        if (tr.label == kEpsilonLabel)
          process_eps(tr.from, tr.to, tr.weight);
        else
          process_box(tr);
      }
    }

    PostStarResult result{std::move(aut_), {}, fresh_, stats_};
    for (std::size_t s = 0; s < summaries_.size(); ++s) {
      const AutState& st = result.automaton.state_info(static_cast<StateId>(s));
      for (const auto& [exit, w] : summaries_[s]) result.summaries.put(st.node, st.mark, exit, w);
    }
    return result;
  }

 private:
  void check_preconditions() {
    const Semiring& sem = rsm_.semiring();
    for (NodeId n = 0; n < rsm_.node_count(); ++n)
      for (const OutEdge& e : rsm_.out(n))
        if (rsm_.node(e.to).kind == NodeKind::exit && !sem.is_one(e.weight))
          throw std::invalid_argument(
              "machine has a weighted transition into an exit; normalize first");
    for (TransId t = 0; t < aut_.transition_count(); ++t)
      if (!sem.is_one(aut_.transition(t).weight))
        throw std::invalid_argument("input automaton must have weight one everywhere");
    ValidationReport shape = validate_shape(aut_, rsm_);
    if (!shape.ok())
      throw std::invalid_argument("input automaton is not shape-valid: " +
                                  shape.issues.front().message);
  }

  Weight ext(const Weight& a, const Weight& b) {
    ++stats_.extends;
    return rsm_.semiring().extend(a, b);
  }
  Weight comb(const Weight& a, const Weight& b) {
    ++stats_.combines;
    return rsm_.semiring().combine(a, b);
  }

  StateId fresh_state(NodeId node) {
    StateId s = aut_.state(node, fresh_);
    aut_.set_initial(s);  // states added by the run are initial in the output
    return s;
  }

  void enqueue(TransId t) {
    if (static_cast<std::size_t>(t) >= in_worklist_.size()) in_worklist_.resize(t + 1, 0);
    if (in_worklist_[t]) return;
    in_worklist_[t] = 1;
    worklist_.push_back(t);
  }

  void enqueue_selfloop(StateId s) {
    if (static_cast<std::size_t>(s) >= selfloop_added_.size()) selfloop_added_.resize(s + 1, 0);
    if (selfloop_added_[s]) return;  // added at most once, ever
    selfloop_added_[s] = 1;
    worklist_.push_back(-static_cast<std::int64_t>(s) - 1);
  }

  // Relaxes (from_node, fresh) -label-> to. The fresh state is materialized
  // only when the value is non-zero: absent transitions behave as zero.
  void relax(NodeId from_node, BoxId label, StateId to, const Weight& v) {
    ++stats_.relax_calls;
    if (rsm_.semiring().is_zero(v)) return;
    StateId from = fresh_state(from_node);
    if (auto existing = aut_.find_transition(from, label, to)) {
      Weight updated = comb(aut_.transition(*existing).weight, v);
      if (updated == aut_.transition(*existing).weight) return;
      aut_.set_weight(*existing, updated);
      bump(*existing);
    } else {
      TransId t = aut_.ensure_transition(from, label, to, v);
      bump(t);
    }
  }

  void bump(TransId t) {
    ++stats_.relax_changes;
    if (static_cast<std::size_t>(t) >= relax_counts_.size()) relax_counts_.resize(t + 1, 0);
    std::uint64_t count = ++relax_counts_[t];
    stats_.max_relax_per_transition = std::max(stats_.max_relax_per_transition, count);
    if (count > options_.relax_cap)
      throw NonTerminationError(
          "post* relaxed one transition more than the configured cap; "
          "semiring may lack the descending chain condition");
    enqueue(t);
  }

  Weight summary(StateId entry_state, NodeId exit) const {
    if (static_cast<std::size_t>(entry_state) >= summaries_.size())
      return rsm_.semiring().zero();
    const auto& per_state = summaries_[entry_state];
    auto it = per_state.find(exit);
    return it == per_state.end() ? rsm_.semiring().zero() : it->second;
  }

  void set_summary(StateId entry_state, NodeId exit, Weight w) {
    if (static_cast<std::size_t>(entry_state) >= summaries_.size())
      summaries_.resize(entry_state + 1);
    summaries_[entry_state][exit] = std::move(w);
  }

  // An epsilon transition (u, m_u) -> (e, m_e) with weight w was extracted:
  // push the frontier across every transition leaving u in the machine.
  void process_eps(StateId u_state, StateId e_state, const Weight& w) {
    const Semiring& sem = rsm_.semiring();
    NodeId u = aut_.state_info(u_state).node;
    for (const OutEdge& edge : rsm_.out(u)) {
      if (sem.is_zero(edge.weight)) continue;  // permanently dead edge
      const NodeInfo& target = rsm_.node(edge.to);
      switch (target.kind) {
        case NodeKind::internal:
          relax(edge.to, kEpsilonLabel, e_state, ext(w, edge.weight));
          break;
        case NodeKind::call: {
          relax(target.peer, target.box, e_state, ext(w, edge.weight));
          enqueue_selfloop(fresh_state(target.peer));
          break;
        }
        case NodeKind::exit: {
          // The hop into the exit has weight one, so w itself is the new
          // entry-to-exit evidence for (e, m_e).
          Weight current = summary(e_state, edge.to);
          if (!sem.leq(current, w)) {
            Weight updated = comb(current, w);
            set_summary(e_state, edge.to, updated);
            // Snapshot: relaxing can add states, which reallocates the
            // adjacency arrays under a live span.
            std::vector<TransId> outgoing(aut_.out_box(e_state).begin(),
                                          aut_.out_box(e_state).end());
            for (TransId t : outgoing) {
              const AutTransition tr = aut_.transition(t);
              NodeId ret = rsm_.return_node(tr.label, edge.to);
              relax(ret, kEpsilonLabel, tr.to, ext(tr.weight, updated));
            }
          }
          break;
        }
        default:
          break;
      }
    }
  }

  // A box transition (e, m_e) -b-> (e', m_e') was extracted: short-circuit the
  // call through the stored entry-to-exit summaries of e's module.
  void process_box(const AutTransition& tr) {
    NodeId e = aut_.state_info(tr.from).node;
    auto summary_state = aut_.find_state(e, fresh_);
    for (NodeId exit : rsm_.exits(rsm_.node(e).module)) {
      Weight s = summary_state ? summary(*summary_state, exit) : rsm_.semiring().zero();
      NodeId ret = rsm_.return_node(tr.label, exit);
      relax(ret, kEpsilonLabel, tr.to, ext(tr.weight, s));
    }
  }

  const Rsm& rsm_;
  PostStarOptions options_;
  ConfigAutomaton aut_;
  Mark fresh_;
  PostStarStats stats_;
  std::deque<std::int64_t> worklist_;  // transition id, or -(state+1) for a self-loop
  std::vector<char> in_worklist_;
  std::vector<char> selfloop_added_;
  std::vector<std::uint64_t> relax_counts_;
  std::vector<std::map<NodeId, Weight>> summaries_;  // by entry state
};

}  // namespace detail

/// Worklist saturation: extends the input automaton with one fresh mark so
/// that for every configuration c, the weight the result assigns to c equals
/// the distance from the input language to c. The input must be normalized
/// (weight one into exits) and carry weight one on every transition. States
/// and transitions are materialized on the fly as the search reaches them.
inline PostStarResult post_star(const Rsm& rsm, const ConfigAutomaton& input,
                                const PostStarOptions& options = {}) {
  return detail::PostStarEngine(rsm, input, options).run();
}

}  // namespace rsmdist
