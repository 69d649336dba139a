#pragma once

#include <deque>
#include <unordered_map>
#include <vector>

#include "rsmdist/rsm.hpp"

namespace rsmdist {

struct OracleOptions {
  std::uint64_t relax_cap = 1'000'000;  // strict decreases allowed per configuration
  int bound_ceiling = 48;               // stabilization gives up past this stack bound
};

/// Distances from an explicit stack-bounded fixpoint. Configurations not
/// present were not reached within the bound.
struct OracleResult {
  std::unordered_map<Configuration, Weight, ConfigurationHash> distances;
  int stack_bound = 0;
  bool stabilized = false;

  Weight at(const Configuration& c, const Semiring& sem) const {
    auto it = distances.find(c);
    return it == distances.end() ? sem.zero() : it->second;
  }
};

/// Least fixpoint of d(c') >= d(c) (x) w(c, c') over all configurations with
/// stack height <= stack_bound, seeded by `initial`. Direct evaluation of the
/// distance definition; exponential, for desk-scale machines only.
inline OracleResult bounded_distances(
    const Rsm& rsm, const std::vector<std::pair<Configuration, Weight>>& initial,
    int stack_bound, const OracleOptions& options = {}) {
  const Semiring& sem = rsm.semiring();
  OracleResult result;
  result.stack_bound = stack_bound;

  std::unordered_map<Configuration, int, ConfigurationHash> index;
  std::vector<Configuration> configs;
  std::vector<Weight> dist;
  std::vector<std::uint64_t> drops;
  std::vector<char> queued;
  std::deque<int> worklist;

  auto intern = [&](const Configuration& c) {
    auto [it, fresh] = index.try_emplace(c, static_cast<int>(configs.size()));
    if (fresh) {
      configs.push_back(c);
      dist.push_back(sem.zero());
      drops.push_back(0);
      queued.push_back(0);
    }
    return it->second;
  };
  auto relax = [&](int id, const Weight& v) {
    Weight next = sem.combine(dist[id], v);
    if (next == dist[id]) return;
    dist[id] = next;
    if (++drops[id] > options.relax_cap)
      throw NonTerminationError("oracle exceeded relaxation cap; semiring may lack DCC");
    if (!queued[id]) {
      queued[id] = 1;
      worklist.push_back(id);
    }
  };

  for (const auto& [c, w] : initial) {
    if (!rsm.well_formed(c)) throw std::invalid_argument("ill-formed initial configuration");
    if (static_cast<int>(c.stack.size()) > stack_bound) continue;
    relax(intern(c), w);
  }

  while (!worklist.empty()) {
    int id = worklist.front();
    worklist.pop_front();
    queued[id] = 0;
    Weight d = dist[id];
    Configuration c = configs[id];  // step() may grow the pools
    for (auto& [succ, w] : rsm.step(c)) {
      if (static_cast<int>(succ.stack.size()) > stack_bound) continue;
      relax(intern(succ), sem.extend(d, w));
    }
  }

  result.distances.reserve(index.size());
  for (const auto& [c, id] : index)
    if (!sem.is_zero(dist[id])) result.distances.emplace(c, dist[id]);
  return result;
}

/// Raises the stack bound (start: deepest query + module count + 1, step +2)
/// until two successive bounds agree on every query, then reports the stable
/// result. Gives up with a diagnostic instead of answering when the ceiling
/// is hit.
inline OracleResult stabilized_distances(
    const Rsm& rsm, const std::vector<std::pair<Configuration, Weight>>& initial,
    const std::vector<Configuration>& queries, const OracleOptions& options = {}) {
  const Semiring& sem = rsm.semiring();
  int start = rsm.module_count() + 1;
  for (const auto& q : queries)
    start = std::max(start, static_cast<int>(q.stack.size()) + rsm.module_count() + 1);
  for (const auto& [c, w] : initial)
    start = std::max(start, static_cast<int>(c.stack.size()) + 1);

  OracleResult prev = bounded_distances(rsm, initial, start, options);
  for (int bound = start + 2;; bound += 2) {
    if (bound > options.bound_ceiling)
      throw InconclusiveError("oracle did not stabilize below the stack-bound ceiling");
    OracleResult next = bounded_distances(rsm, initial, bound, options);
    bool agree = true;
    for (const auto& q : queries)
      if (prev.at(q, sem) != next.at(q, sem)) {
        agree = false;
        break;
      }
    if (agree) {
      next.stabilized = true;
      return next;
    }
    prev = std::move(next);
  }
}

}  // namespace rsmdist
