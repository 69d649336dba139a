#pragma once

#include <random>
#include <set>
#include <string>
#include <vector>

#include "rsmdist/rsm.hpp"

namespace rsmdist {

struct RandomRsmParams {
  int max_modules = 6;
  int max_entries = 3;
  int max_exits = 3;
  int max_internals = 3;
  int max_boxes = 2;        // per module; keeps the stack branching desk-scale
  int max_transitions = 40;
  double recursion_prob = 0.4;   // chance a box may call backwards (cycles)
  double zero_weight_prob = 0.05;
  bool normalized = false;       // emit weight one into exits directly
};

inline Weight random_weight(const Semiring& sem, std::mt19937_64& rng,
                            double zero_prob = 0.05) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < zero_prob) return sem.zero();
  switch (sem.kind()) {
    case SemiringKind::boolean:
      return sem.from_bool(true);
    case SemiringKind::tropical: {
      std::uniform_int_distribution<std::uint64_t> cost(0, 6);
      return sem.from_cost(cost(rng));
    }
    case SemiringKind::genkill: {
      std::uniform_int_distribution<std::uint64_t> bits(
          0, (std::uint64_t{1} << sem.universe().size()) - 1);
      return sem.transfer_bits(bits(rng), bits(rng));
    }
  }
  return sem.one();
}

/// Seeded random machine for property testing: small module count, bounded
/// interface sizes, mixed forward and recursive calls.
inline Rsm random_rsm(std::uint64_t seed, const Semiring& sem,
                      const RandomRsmParams& params = {}) {
  std::mt19937_64 rng(seed);
  auto pick = [&rng](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  RsmBuilder builder(sem);
  int module_count = pick(1, params.max_modules);
  std::vector<ModuleId> modules;
  for (int m = 0; m < module_count; ++m)
    modules.push_back(builder.add_module("M" + std::to_string(m)));

  // Node name pools per module; call/return names are derived once the
  // callee interface sizes are fixed.
  std::vector<int> entries(module_count), exits(module_count);
  std::vector<std::vector<std::string>> sources(module_count), targets(module_count);
  for (int m = 0; m < module_count; ++m) {
    std::string prefix = "M" + std::to_string(m) + "_";
    entries[m] = pick(1, params.max_entries);
    exits[m] = pick(0, params.max_exits);
    int internals = pick(0, params.max_internals);
    for (int i = 0; i < entries[m]; ++i) {
      std::string name = prefix + "e" + std::to_string(i);
      builder.add_entry(modules[m], name);
      sources[m].push_back(name);
    }
    for (int i = 0; i < exits[m]; ++i) {
      std::string name = prefix + "x" + std::to_string(i);
      builder.add_exit(modules[m], name);
      targets[m].push_back(name);
    }
    for (int i = 0; i < internals; ++i) {
      std::string name = prefix + "u" + std::to_string(i);
      builder.add_internal(modules[m], name);
      sources[m].push_back(name);
      targets[m].push_back(name);
    }
  }

  for (int m = 0; m < module_count; ++m) {
    std::string prefix = "M" + std::to_string(m) + "_";
    int boxes = pick(0, params.max_boxes);
    for (int i = 0; i < boxes; ++i) {
      int callee = coin(rng) < params.recursion_prob || m + 1 >= module_count
                       ? pick(0, module_count - 1)
                       : pick(m + 1, module_count - 1);
      std::string name = prefix + "b" + std::to_string(i);
      builder.add_box(modules[m], name, modules[callee]);
      std::string callee_prefix = "M" + std::to_string(callee) + "_";
      for (int e = 0; e < entries[callee]; ++e)
        targets[m].push_back(name + "." + callee_prefix + "e" + std::to_string(e));
      for (int x = 0; x < exits[callee]; ++x)
        sources[m].push_back(name + "." + callee_prefix + "x" + std::to_string(x));
    }
  }

  int budget = pick(module_count, params.max_transitions);
  std::set<std::pair<std::string, std::string>> used;
  for (int attempt = 0; attempt < budget * 3 && static_cast<int>(used.size()) < budget;
       ++attempt) {
    int m = pick(0, module_count - 1);
    if (sources[m].empty() || targets[m].empty()) continue;
    const std::string& from = sources[m][pick(0, static_cast<int>(sources[m].size()) - 1)];
    const std::string& to = targets[m][pick(0, static_cast<int>(targets[m].size()) - 1)];
    if (!used.insert({from, to}).second) continue;
    bool into_exit = to.find("_x") != std::string::npos && to.find('.') == std::string::npos;
    Weight w = params.normalized && into_exit ? sem.one()
                                              : random_weight(sem, rng, params.zero_weight_prob);
    builder.add_transition(from, to, w);
  }
  return std::move(builder).build();
}

/// A uniformly random well-formed configuration with stack height <= max_stack.
inline Configuration random_configuration(const Rsm& rsm, std::mt19937_64& rng,
                                          int max_stack) {
  std::vector<NodeId> candidates;
  for (NodeId n = 0; n < rsm.node_count(); ++n) {
    NodeKind k = rsm.node(n).kind;
    if (k == NodeKind::internal || k == NodeKind::entry || k == NodeKind::ret)
      candidates.push_back(n);
  }
  auto pick = [&rng](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  Configuration c{candidates[pick(0, static_cast<int>(candidates.size()) - 1)], {}};
  ModuleId want = rsm.node(c.node).module;
  int height = pick(0, max_stack);
  for (int i = 0; i < height; ++i) {
    std::vector<BoxId> callers;
    for (BoxId b = 0; b < rsm.box_count(); ++b)
      if (rsm.box(b).callee == want) callers.push_back(b);
    if (callers.empty()) break;
    BoxId b = callers[pick(0, static_cast<int>(callers.size()) - 1)];
    c.stack.push_back(b);
    want = rsm.box(b).module;
  }
  return c;
}

/// Every well-formed stack of height <= max_height that can sit under `node`,
/// in breadth-first order starting from the empty stack.
inline std::vector<std::vector<BoxId>> enumerate_stacks(const Rsm& rsm, NodeId node,
                                                        int max_height) {
  std::vector<std::vector<BoxId>> callers_of(rsm.module_count());
  for (BoxId b = 0; b < rsm.box_count(); ++b)
    if (rsm.box(b).callee >= 0 && rsm.box(b).callee < rsm.module_count())
      callers_of[rsm.box(b).callee].push_back(b);
  std::vector<std::vector<BoxId>> result{{}};
  std::vector<std::vector<BoxId>> frontier{{}};
  for (int h = 0; h < max_height; ++h) {
    std::vector<std::vector<BoxId>> next;
    for (const auto& stack : frontier) {
      ModuleId want = stack.empty() ? rsm.node(node).module : rsm.box(stack.back()).module;
      for (BoxId b : callers_of[want]) {
        auto extended = stack;
        extended.push_back(b);
        result.push_back(extended);
        next.push_back(std::move(extended));
      }
    }
    frontier = std::move(next);
  }
  return result;
}

}  // namespace rsmdist
