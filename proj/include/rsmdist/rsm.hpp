#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rsmdist/semiring.hpp"

namespace rsmdist {

using NodeId = std::int32_t;
using BoxId = std::int32_t;
using ModuleId = std::int32_t;

enum class NodeKind : std::uint8_t { internal, entry, exit, call, ret };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::internal: return "internal";
    case NodeKind::entry: return "entry";
    case NodeKind::exit: return "exit";
    case NodeKind::call: return "call";
    case NodeKind::ret: return "return";
  }
  return "?";
}

struct NodeInfo {
  NodeKind kind;
  ModuleId module;
  std::string name;
  int local_index = -1;  // position within the module's list of this kind
  BoxId box = -1;        // call/return nodes: the owning box
  NodeId peer = -1;      // call: callee entry; return: callee exit
};

struct BoxInfo {
  ModuleId module;
  ModuleId callee;  // may be out of range in an ill-formed machine
  std::string name;
};

struct OutEdge {
  NodeId to;
  Weight weight;
};

/// A control node plus the stack of boxes of the calls still pending.
/// The first stack element is the top (the most recent call).
struct Configuration {
  NodeId node = -1;
  std::vector<BoxId> stack;

  friend bool operator==(const Configuration&, const Configuration&) = default;
};

struct ConfigurationHash {
  std::size_t operator()(const Configuration& c) const {
    std::size_t h = std::hash<std::int64_t>()(c.node);
    for (BoxId b : c.stack) h = h * 1000003u ^ std::hash<std::int64_t>()(b);
    return h;
  }
};

/// A node plus the sequence of modules the pending calls went through,
/// forgetting which box in each module was used.
struct Superconfiguration {
  NodeId node = -1;
  std::vector<ModuleId> modules;

  friend bool operator==(const Superconfiguration&, const Superconfiguration&) = default;
};

class RsmBuilder;

/// A weighted recursive state machine: a collection of modules whose boxes
/// invoke other modules. Immutable once built; shareable across threads.
class Rsm {
 public:
  const Semiring& semiring() const { return semiring_; }

  int module_count() const { return static_cast<int>(modules_.size()); }
  const std::string& module_name(ModuleId m) const { return modules_[m].name; }
  std::optional<ModuleId> find_module(const std::string& name) const {
    auto it = module_by_name_.find(name);
    return it == module_by_name_.end() ? std::nullopt : std::optional(it->second);
  }

  std::span<const NodeId> entries(ModuleId m) const { return modules_[m].entries; }
  std::span<const NodeId> exits(ModuleId m) const { return modules_[m].exits; }
  std::span<const NodeId> internals(ModuleId m) const { return modules_[m].internals; }
  std::span<const BoxId> boxes(ModuleId m) const { return modules_[m].boxes; }

  int node_count() const { return static_cast<int>(nodes_.size()); }
  const NodeInfo& node(NodeId n) const { return nodes_[n]; }
  bool valid_node(NodeId n) const { return n >= 0 && n < node_count(); }
  std::optional<NodeId> find_node(const std::string& name) const {
    auto it = node_by_name_.find(name);
    return it == node_by_name_.end() ? std::nullopt : std::optional(it->second);
  }

  int box_count() const { return static_cast<int>(boxes_.size()); }
  const BoxInfo& box(BoxId b) const { return boxes_[b]; }
  bool valid_box(BoxId b) const { return b >= 0 && b < box_count(); }
  std::optional<BoxId> find_box(const std::string& name) const {
    auto it = box_by_name_.find(name);
    return it == box_by_name_.end() ? std::nullopt : std::optional(it->second);
  }

  /// The call node (b, e) for an entry e of b's callee, -1 if absent.
  NodeId call_node(BoxId b, NodeId callee_entry) const {
    const auto& per_box = call_nodes_[b];
    int idx = nodes_[callee_entry].local_index;
    return idx >= 0 && idx < static_cast<int>(per_box.size()) ? per_box[idx] : -1;
  }

  /// The return node (b, x) for an exit x of b's callee, -1 if absent.
  NodeId return_node(BoxId b, NodeId callee_exit) const {
    const auto& per_box = return_nodes_[b];
    int idx = nodes_[callee_exit].local_index;
    return idx >= 0 && idx < static_cast<int>(per_box.size()) ? per_box[idx] : -1;
  }

  std::span<const OutEdge> out(NodeId n) const { return adjacency_[n]; }
  std::size_t transition_count() const { return transition_count_; }

  // -- derived metrics ------------------------------------------------------

  /// |A| = max(number of nodes, number of transitions).
  std::size_t size() const { return std::max<std::size_t>(nodes_.size(), transition_count_); }

  int entry_bound() const { return entry_bound_; }  // max entries per module
  int exit_bound() const { return exit_bound_; }    // max exits per module
  std::size_t call_node_count() const { return call_node_count_; }

  // -- configuration semantics ----------------------------------------------

  /// Checks the chain condition: the node lives in the module called through
  /// the top box, and each box is called from the module of the box above it.
  bool well_formed(const Configuration& c) const {
    if (!valid_node(c.node)) return false;
    NodeKind k = nodes_[c.node].kind;
    if (k != NodeKind::internal && k != NodeKind::entry && k != NodeKind::ret) return false;
    ModuleId want = nodes_[c.node].module;
    for (BoxId b : c.stack) {
      if (!valid_box(b) || boxes_[b].callee != want) return false;
      want = boxes_[b].module;
    }
    return true;
  }

  /// Single-step successor relation. Exits and calls are not configuration
  /// nodes: a call lands at the callee entry with the box pushed, an exit
  /// pops the top box and lands at the matching return node. A pop with an
  /// empty stack yields no successor.
  std::vector<std::pair<Configuration, Weight>> step(const Configuration& c) const {
    if (!well_formed(c)) throw std::invalid_argument("ill-formed configuration");
    std::vector<std::pair<Configuration, Weight>> result;
    for (const OutEdge& edge : adjacency_[c.node]) {
      const NodeInfo& target = nodes_[edge.to];
      switch (target.kind) {
        case NodeKind::internal:
          result.push_back({{edge.to, c.stack}, edge.weight});
          break;
        case NodeKind::call: {
          Configuration next{target.peer, {}};
          next.stack.reserve(c.stack.size() + 1);
          next.stack.push_back(target.box);
          next.stack.insert(next.stack.end(), c.stack.begin(), c.stack.end());
          result.push_back({std::move(next), edge.weight});
          break;
        }
        case NodeKind::exit: {
          if (c.stack.empty()) break;
          BoxId top = c.stack.front();
          NodeId ret = return_node(top, edge.to);
          Configuration next{ret, {c.stack.begin() + 1, c.stack.end()}};
          result.push_back({std::move(next), edge.weight});
          break;
        }
        default:
          break;  // transitions never target entry or return nodes
      }
    }
    return result;
  }

 private:
  friend class RsmBuilder;

  struct ModuleData {
    std::string name;
    std::vector<NodeId> entries, exits, internals;
    std::vector<BoxId> boxes;
  };

  Rsm(Semiring s) : semiring_(std::move(s)) {}

  Semiring semiring_;
  std::vector<ModuleData> modules_;
  std::vector<NodeInfo> nodes_;
  std::vector<BoxInfo> boxes_;
  std::vector<std::vector<NodeId>> call_nodes_;    // per box, by callee-entry index
  std::vector<std::vector<NodeId>> return_nodes_;  // per box, by callee-exit index
  std::vector<std::vector<OutEdge>> adjacency_;    // sorted by target id
  std::unordered_map<std::string, ModuleId> module_by_name_;
  std::unordered_map<std::string, NodeId> node_by_name_;
  std::unordered_map<std::string, BoxId> box_by_name_;
  std::size_t transition_count_ = 0;
  std::size_t call_node_count_ = 0;
  int entry_bound_ = 0;
  int exit_bound_ = 0;
};

/// Staged construction: declare all modules, then their nodes, then boxes
/// (which materializes call/return nodes against the callee interface), then
/// transitions. Call and return nodes are addressed as "box.entry" and
/// "box.exit".
class RsmBuilder {
 public:
  explicit RsmBuilder(Semiring s) : rsm_(std::move(s)) {}

  const Semiring& semiring() const { return rsm_.semiring_; }

  ModuleId add_module(const std::string& name) {
    if (rsm_.module_by_name_.count(name))
      throw std::invalid_argument("duplicate module name: " + name);
    ModuleId id = static_cast<ModuleId>(rsm_.modules_.size());
    rsm_.modules_.push_back({name, {}, {}, {}, {}});
    rsm_.module_by_name_.emplace(name, id);
    return id;
  }

  NodeId add_entry(ModuleId m, const std::string& name) {
    return add_node(m, name, NodeKind::entry);
  }
  NodeId add_exit(ModuleId m, const std::string& name) {
    return add_node(m, name, NodeKind::exit);
  }
  NodeId add_internal(ModuleId m, const std::string& name) {
    return add_node(m, name, NodeKind::internal);
  }

  /// Adds a box and its derived call/return nodes. The callee interface must
  /// already be declared. An out-of-range callee is recorded as-is so that
  /// validation can report it.
  BoxId add_box(ModuleId m, const std::string& name, ModuleId callee) {
    if (rsm_.box_by_name_.count(name))
      throw std::invalid_argument("duplicate box name: " + name);
    BoxId id = static_cast<BoxId>(rsm_.boxes_.size());
    rsm_.boxes_.push_back({m, callee, name});
    rsm_.box_by_name_.emplace(name, id);
    rsm_.modules_[m].boxes.push_back(id);
    rsm_.call_nodes_.emplace_back();
    rsm_.return_nodes_.emplace_back();
    if (callee >= 0 && callee < static_cast<ModuleId>(rsm_.modules_.size())) {
      for (NodeId e : rsm_.modules_[callee].entries) {
        NodeId c = add_node(m, name + "." + rsm_.nodes_[e].name, NodeKind::call);
        rsm_.nodes_[c].box = id;
        rsm_.nodes_[c].peer = e;
        rsm_.call_nodes_[id].push_back(c);
      }
      for (NodeId x : rsm_.modules_[callee].exits) {
        NodeId r = add_node(m, name + "." + rsm_.nodes_[x].name, NodeKind::ret);
        rsm_.nodes_[r].box = id;
        rsm_.nodes_[r].peer = x;
        rsm_.return_nodes_[id].push_back(r);
      }
    }
    return id;
  }

  void add_transition(NodeId from, NodeId to, Weight w) {
    if (!rsm_.valid_node(from) || !rsm_.valid_node(to))
      throw std::invalid_argument("transition endpoint out of range");
    pending_.push_back({from, to, w});
  }

  void add_transition(const std::string& from, const std::string& to, Weight w) {
    add_transition(named(from), named(to), w);
  }

  Rsm build() && {
    rsm_.adjacency_.assign(rsm_.nodes_.size(), {});
    for (const auto& t : pending_) rsm_.adjacency_[t.from].push_back({t.to, t.weight});
    for (auto& edges : rsm_.adjacency_)
      std::stable_sort(edges.begin(), edges.end(),
                       [](const OutEdge& a, const OutEdge& b) { return a.to < b.to; });
    rsm_.transition_count_ = pending_.size();
    for (const auto& m : rsm_.modules_) {
      rsm_.entry_bound_ = std::max(rsm_.entry_bound_, static_cast<int>(m.entries.size()));
      rsm_.exit_bound_ = std::max(rsm_.exit_bound_, static_cast<int>(m.exits.size()));
    }
    for (const auto& n : rsm_.nodes_)
      if (n.kind == NodeKind::call) ++rsm_.call_node_count_;
    return std::move(rsm_);
  }

 private:
  struct PendingTransition {
    NodeId from, to;
    Weight weight;
  };

  NodeId add_node(ModuleId m, const std::string& name, NodeKind kind) {
    if (m < 0 || m >= static_cast<ModuleId>(rsm_.modules_.size()))
      throw std::invalid_argument("module id out of range");
    if (rsm_.node_by_name_.count(name))
      throw std::invalid_argument("duplicate node name: " + name);
    NodeId id = static_cast<NodeId>(rsm_.nodes_.size());
    NodeInfo info{kind, m, name, -1, -1, -1};
    auto& mod = rsm_.modules_[m];
    switch (kind) {
      case NodeKind::entry:
        info.local_index = static_cast<int>(mod.entries.size());
        mod.entries.push_back(id);
        break;
      case NodeKind::exit:
        info.local_index = static_cast<int>(mod.exits.size());
        mod.exits.push_back(id);
        break;
      case NodeKind::internal:
        info.local_index = static_cast<int>(mod.internals.size());
        mod.internals.push_back(id);
        break;
      default:
        break;
    }
    rsm_.nodes_.push_back(std::move(info));
    rsm_.node_by_name_.emplace(name, id);
    return id;
  }

  NodeId named(const std::string& name) const {
    auto it = rsm_.node_by_name_.find(name);
    if (it == rsm_.node_by_name_.end())
      throw std::invalid_argument("unknown node: " + name);
    return it->second;
  }

  Rsm rsm_;
  std::vector<PendingTransition> pending_;
};

struct ValidationIssue {
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  void add(std::string message) { issues.push_back({std::move(message)}); }
};

/// Structural validation: box targets in range, transition endpoints within
/// one module and of the allowed kinds, weights from the machine's semiring.
/// Non-one weights into exits are legal here; normalization removes them.
inline ValidationReport validate(const Rsm& rsm) {
  ValidationReport report;
  for (BoxId b = 0; b < rsm.box_count(); ++b) {
    const BoxInfo& box = rsm.box(b);
    if (box.callee < 0 || box.callee >= rsm.module_count())
      report.add("box '" + box.name + "' targets module index out of range");
  }
  for (NodeId n = 0; n < rsm.node_count(); ++n) {
    const NodeInfo& from = rsm.node(n);
    for (const OutEdge& edge : rsm.out(n)) {
      const NodeInfo& to = rsm.node(edge.to);
      std::string where = "transition " + from.name + " -> " + to.name;
      if (from.kind == NodeKind::exit)
        report.add(where + ": exit node as transition source");
      if (from.kind == NodeKind::call)
        report.add(where + ": call node as transition source");
      if (to.kind == NodeKind::entry)
        report.add(where + ": entry node as transition target");
      if (to.kind == NodeKind::ret)
        report.add(where + ": return node as transition target");
      if (from.module != to.module)
        report.add(where + ": endpoints in different modules");
      if (edge.weight.kind != rsm.semiring().kind())
        report.add(where + ": weight from a different semiring");
    }
  }
  return report;
}

/// Rewrites every weighted transition into an exit (u, x, w) with w != one
/// as (u, u', w), (u', x, one) through a fresh internal node, preserving all
/// distances to original nodes.
inline Rsm normalize_exit_weights(const Rsm& rsm) {
  const Semiring& sem = rsm.semiring();
  bool needed = false;
  for (NodeId n = 0; n < rsm.node_count() && !needed; ++n)
    for (const OutEdge& edge : rsm.out(n))
      if (rsm.node(edge.to).kind == NodeKind::exit && !sem.is_one(edge.weight)) {
        needed = true;
        break;
      }
  if (!needed) return rsm;

  RsmBuilder builder(sem);
  for (ModuleId m = 0; m < rsm.module_count(); ++m) builder.add_module(rsm.module_name(m));
  for (NodeId n = 0; n < rsm.node_count(); ++n) {
    const NodeInfo& info = rsm.node(n);
    switch (info.kind) {
      case NodeKind::entry: builder.add_entry(info.module, info.name); break;
      case NodeKind::exit: builder.add_exit(info.module, info.name); break;
      case NodeKind::internal: builder.add_internal(info.module, info.name); break;
      default: break;
    }
  }
  for (BoxId b = 0; b < rsm.box_count(); ++b)
    builder.add_box(rsm.box(b).module, rsm.box(b).name, rsm.box(b).callee);

  // Node names survive the rebuild, so ids can be resolved by name.
  auto by_name = [&rsm](NodeId n) { return rsm.node(n).name; };
  int aux = 0;
  for (NodeId n = 0; n < rsm.node_count(); ++n) {
    for (const OutEdge& edge : rsm.out(n)) {
      if (rsm.node(edge.to).kind == NodeKind::exit && !sem.is_one(edge.weight)) {
        std::string hop;
        do {
          hop = "__exit" + std::to_string(aux++);
        } while (rsm.find_node(hop));
        builder.add_internal(rsm.node(n).module, hop);
        builder.add_transition(by_name(n), hop, edge.weight);
        builder.add_transition(hop, by_name(edge.to), sem.one());
      } else {
        builder.add_transition(by_name(n), by_name(edge.to), edge.weight);
      }
    }
  }
  return std::move(builder).build();
}

/// Single-module family with n entries, n exits and one self-recursive box;
/// every entry connects to every call and exit node, every return node
/// connects to every exit.
inline Rsm dense_family(int n, const Semiring& sem) {
  if (n < 1) throw std::invalid_argument("dense_family needs n >= 1");
  RsmBuilder builder(sem);
  ModuleId m = builder.add_module("M");
  std::vector<NodeId> entries, exits;
  for (int i = 0; i < n; ++i) entries.push_back(builder.add_entry(m, "e" + std::to_string(i)));
  for (int i = 0; i < n; ++i) exits.push_back(builder.add_exit(m, "x" + std::to_string(i)));
  builder.add_box(m, "b", m);
  Weight one = sem.one();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      builder.add_transition("e" + std::to_string(i), "b.e" + std::to_string(j), one);
      builder.add_transition("e" + std::to_string(i), "x" + std::to_string(j), one);
      builder.add_transition("b.x" + std::to_string(i), "x" + std::to_string(j), one);
    }
  }
  return std::move(builder).build();
}

}  // namespace rsmdist
