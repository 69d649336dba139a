#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <json.hpp>

#include "rsmdist/automaton.hpp"
#include "rsmdist/concurrent.hpp"
#include "rsmdist/rsm.hpp"

namespace rsmdist::io {

using nlohmann::json;

/// Malformed document; the message carries the JSON path of the offender.
struct DocumentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

[[noreturn]] inline void bail(const std::string& path, const std::string& what) {
  throw DocumentError(path + ": " + what);
}

inline const json& field(const json& j, const char* name, const std::string& path) {
  if (!j.is_object()) bail(path, "expected an object");
  auto it = j.find(name);
  if (it == j.end()) bail(path + "." + name, "missing field");
  return *it;
}

inline std::string str(const json& j, const std::string& path) {
  if (!j.is_string()) bail(path, "expected a string");
  return j.get<std::string>();
}

inline std::vector<std::string> str_list(const json& j, const std::string& path) {
  if (!j.is_array()) bail(path, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(str(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace detail

// -- weights ------------------------------------------------------------------

inline Weight parse_weight(const Semiring& sem, const json& j, const std::string& path) {
  switch (sem.kind()) {
    case SemiringKind::boolean:
      if (!j.is_boolean()) detail::bail(path, "boolean weight must be true or false");
      return sem.from_bool(j.get<bool>());
    case SemiringKind::tropical:
      if (j.is_string() && j.get<std::string>() == "inf") return sem.infinity();
      if (j.is_number_unsigned()) return sem.from_cost(j.get<std::uint64_t>());
      if (j.is_number_integer() && j.get<std::int64_t>() >= 0)
        return sem.from_cost(static_cast<std::uint64_t>(j.get<std::int64_t>()));
      detail::bail(path, "tropical weight must be a non-negative integer or \"inf\"");
    case SemiringKind::genkill: {
      if (j.is_string() && j.get<std::string>() == "bot") return sem.zero();
      if (!j.is_object()) detail::bail(path, "genkill weight must be {\"kill\":[..],\"gen\":[..]} or \"bot\"");
      std::vector<std::string> kill, gen;
      if (j.contains("kill")) kill = detail::str_list(j["kill"], path + ".kill");
      if (j.contains("gen")) gen = detail::str_list(j["gen"], path + ".gen");
      try {
        return sem.transfer(kill, gen);
      } catch (const std::invalid_argument& e) {
        detail::bail(path, e.what());
      }
    }
  }
  detail::bail(path, "unsupported weight");
}

inline json weight_to_json(const Semiring& sem, const Weight& w) {
  switch (sem.kind()) {
    case SemiringKind::boolean:
      return w.a != 0;
    case SemiringKind::tropical:
      return w.a == kInfinityCost ? json("inf") : json(w.a);
    case SemiringKind::genkill: {
      if (sem.is_bottom(w)) return "bot";
      json kill = json::array(), gen = json::array();
      for (std::size_t i = 0; i < sem.universe().size(); ++i) {
        if (w.a >> i & 1) kill.push_back(sem.universe()[i]);
        if (w.b >> i & 1) gen.push_back(sem.universe()[i]);
      }
      return json{{"kill", kill}, {"gen", gen}};
    }
  }
  return nullptr;
}

// -- machine documents ----------------------------------------------------------

inline Rsm parse_rsm_document(const json& doc) {
  Semiring sem = [&doc] {
    try {
      return Semiring::parse(detail::str(detail::field(doc, "semiring", "$"), "$.semiring"));
    } catch (const std::invalid_argument& e) {
      detail::bail("$.semiring", e.what());
    }
  }();
  const json& modules = detail::field(doc, "modules", "$");
  if (!modules.is_array()) detail::bail("$.modules", "expected an array");

  RsmBuilder builder(std::move(sem));
  std::vector<ModuleId> ids;
  for (std::size_t i = 0; i < modules.size(); ++i) {
    std::string path = "$.modules[" + std::to_string(i) + "]";
    ids.push_back(builder.add_module(detail::str(detail::field(modules[i], "name", path), path + ".name")));
  }
  auto lists = [&](const json& m, const char* key, const std::string& path) {
    return m.contains(key) ? detail::str_list(m[key], path) : std::vector<std::string>{};
  };
  for (std::size_t i = 0; i < modules.size(); ++i) {
    std::string path = "$.modules[" + std::to_string(i) + "]";
    for (const auto& n : lists(modules[i], "entries", path + ".entries"))
      builder.add_entry(ids[i], n);
    for (const auto& n : lists(modules[i], "exits", path + ".exits")) builder.add_exit(ids[i], n);
    for (const auto& n : lists(modules[i], "internals", path + ".internals"))
      builder.add_internal(ids[i], n);
  }
  for (std::size_t i = 0; i < modules.size(); ++i) {
    std::string path = "$.modules[" + std::to_string(i) + "].boxes";
    if (!modules[i].contains("boxes")) continue;
    const json& boxes = modules[i]["boxes"];
    if (!boxes.is_array()) detail::bail(path, "expected an array");
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      std::string bpath = path + "[" + std::to_string(b) + "]";
      std::string name = detail::str(detail::field(boxes[b], "name", bpath), bpath + ".name");
      std::string callee = detail::str(detail::field(boxes[b], "calls", bpath), bpath + ".calls");
      // Unknown callee names are preserved as an invalid index so that
      // validation can report them instead of the parser.
      auto callee_id = [&]() -> ModuleId {
        for (std::size_t m = 0; m < modules.size(); ++m)
          if (modules[m].contains("name") && modules[m]["name"] == callee)
            return static_cast<ModuleId>(m);
        return -1;
      }();
      builder.add_box(ids[i], name, callee_id);
    }
  }
  for (std::size_t i = 0; i < modules.size(); ++i) {
    std::string path = "$.modules[" + std::to_string(i) + "].transitions";
    if (!modules[i].contains("transitions")) continue;
    const json& ts = modules[i]["transitions"];
    if (!ts.is_array()) detail::bail(path, "expected an array");
    for (std::size_t t = 0; t < ts.size(); ++t) {
      std::string tpath = path + "[" + std::to_string(t) + "]";
      std::string from = detail::str(detail::field(ts[t], "from", tpath), tpath + ".from");
      std::string to = detail::str(detail::field(ts[t], "to", tpath), tpath + ".to");
      Weight w = parse_weight(builder.semiring(), detail::field(ts[t], "weight", tpath),
                              tpath + ".weight");
      try {
        builder.add_transition(from, to, w);
      } catch (const std::invalid_argument& e) {
        detail::bail(tpath, e.what());
      }
    }
  }
  return std::move(builder).build();
}

inline json rsm_to_json(const Rsm& rsm) {
  json modules = json::array();
  for (ModuleId m = 0; m < rsm.module_count(); ++m) {
    json mod{{"name", rsm.module_name(m)}};
    json entries = json::array(), exits = json::array(), internals = json::array();
    for (NodeId n : rsm.entries(m)) entries.push_back(rsm.node(n).name);
    for (NodeId n : rsm.exits(m)) exits.push_back(rsm.node(n).name);
    for (NodeId n : rsm.internals(m)) internals.push_back(rsm.node(n).name);
    mod["entries"] = entries;
    mod["exits"] = exits;
    mod["internals"] = internals;
    json boxes = json::array();
    for (BoxId b : rsm.boxes(m)) {
      json box{{"name", rsm.box(b).name}};
      ModuleId callee = rsm.box(b).callee;
      box["calls"] = callee >= 0 && callee < rsm.module_count() ? json(rsm.module_name(callee))
                                                                : json(nullptr);
      boxes.push_back(box);
    }
    mod["boxes"] = boxes;
    mod["transitions"] = json::array();
    modules.push_back(mod);
  }
  // transitions listed under their source's module, sorted by endpoint names
  // so that the rendering does not depend on internal node numbering
  std::vector<std::vector<std::tuple<std::string, std::string, json>>> rows(rsm.module_count());
  for (NodeId n = 0; n < rsm.node_count(); ++n)
    for (const OutEdge& e : rsm.out(n))
      rows[rsm.node(n).module].push_back(
          {rsm.node(n).name, rsm.node(e.to).name, weight_to_json(rsm.semiring(), e.weight)});
  for (ModuleId m = 0; m < rsm.module_count(); ++m) {
    std::sort(rows[m].begin(), rows[m].end(), [](const auto& a, const auto& b) {
      return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
    });
    for (auto& [from, to, weight] : rows[m])
      modules[m]["transitions"].push_back(json{{"from", from}, {"to", to}, {"weight", weight}});
  }
  return json{{"semiring", rsm.semiring().name()}, {"modules", modules}};
}

// -- configurations and queries -------------------------------------------------

inline Configuration parse_configuration(const Rsm& rsm, const json& j, const std::string& path) {
  Configuration c;
  std::string node = detail::str(detail::field(j, "node", path), path + ".node");
  auto id = rsm.find_node(node);
  if (!id) detail::bail(path + ".node", "unknown node: " + node);
  c.node = *id;
  if (j.contains("stack"))
    for (const auto& b : detail::str_list(j["stack"], path + ".stack")) {
      auto box = rsm.find_box(b);
      if (!box) detail::bail(path + ".stack", "unknown box: " + b);
      c.stack.push_back(*box);
    }
  if (!rsm.well_formed(c)) detail::bail(path, "configuration violates the chain condition");
  return c;
}

/// "u1" or "u1[b2,b1]" (stack top first), as accepted on the command line.
inline Configuration parse_configuration_text(const Rsm& rsm, const std::string& text) {
  json j = json::object();
  auto bracket = text.find('[');
  if (bracket == std::string::npos) {
    j["node"] = text;
  } else {
    if (text.back() != ']') throw DocumentError("configuration text must end with ']'");
    j["node"] = text.substr(0, bracket);
    json stack = json::array();
    std::string inner = text.substr(bracket + 1, text.size() - bracket - 2);
    std::size_t pos = 0;
    while (pos < inner.size()) {
      std::size_t comma = inner.find(',', pos);
      if (comma == std::string::npos) comma = inner.size();
      stack.push_back(inner.substr(pos, comma - pos));
      pos = comma + 1;
    }
    j["stack"] = stack;
  }
  return parse_configuration(rsm, j, "$");
}

enum class QueryKind { config, superconfig, node, same_context };

struct Query {
  QueryKind kind;
  Configuration config;       // config queries
  Superconfiguration super;   // superconfig queries
  NodeId node = -1;           // node queries
  ModuleId module = -1;       // same-context queries
  std::string text;           // input rendering for result lines
};

inline std::vector<Query> parse_queries(const Rsm& rsm, const json& doc) {
  if (!doc.is_array()) detail::bail("$", "query document must be an array");
  std::vector<Query> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    std::string path = "$[" + std::to_string(i) + "]";
    std::string kind = detail::str(detail::field(doc[i], "kind", path), path + ".kind");
    Query q;
    if (kind == "config") {
      q.kind = QueryKind::config;
      q.config = parse_configuration(rsm, doc[i], path);
      std::string stack;
      for (std::size_t s = 0; s < q.config.stack.size(); ++s)
        stack += (s ? "," : "") + rsm.box(q.config.stack[s]).name;
      q.text = rsm.node(q.config.node).name + " [" + stack + "]";
    } else if (kind == "superconfig") {
      q.kind = QueryKind::superconfig;
      std::string node = detail::str(detail::field(doc[i], "node", path), path + ".node");
      auto id = rsm.find_node(node);
      if (!id) detail::bail(path + ".node", "unknown node: " + node);
      q.super.node = *id;
      std::string stack;
      for (const auto& name : detail::str_list(detail::field(doc[i], "modules", path),
                                               path + ".modules")) {
        auto m = rsm.find_module(name);
        if (!m) detail::bail(path + ".modules", "unknown module: " + name);
        q.super.modules.push_back(*m);
        stack += (stack.empty() ? "" : ",") + name;
      }
      q.text = node + " [" + stack + "]";
    } else if (kind == "node") {
      q.kind = QueryKind::node;
      std::string node = detail::str(detail::field(doc[i], "node", path), path + ".node");
      auto id = rsm.find_node(node);
      if (!id) detail::bail(path + ".node", "unknown node: " + node);
      q.node = *id;
      q.text = node;
    } else if (kind == "same-context") {
      q.kind = QueryKind::same_context;
      std::string module = detail::str(detail::field(doc[i], "module", path), path + ".module");
      std::string node = detail::str(detail::field(doc[i], "node", path), path + ".node");
      auto m = rsm.find_module(module);
      if (!m) detail::bail(path + ".module", "unknown module: " + module);
      auto id = rsm.find_node(node);
      if (!id) detail::bail(path + ".node", "unknown node: " + node);
      q.module = *m;
      q.node = *id;
      q.text = module + " " + node;
    } else {
      detail::bail(path + ".kind", "unknown query kind: " + kind);
    }
    out.push_back(std::move(q));
  }
  return out;
}

inline const char* query_kind_name(QueryKind k) {
  switch (k) {
    case QueryKind::config: return "config";
    case QueryKind::superconfig: return "superconfig";
    case QueryKind::node: return "node";
    case QueryKind::same_context: return "same-context";
  }
  return "?";
}

// -- automaton documents ----------------------------------------------------------

inline json automaton_to_json(const ConfigAutomaton& aut, const Rsm& rsm) {
  std::vector<StateId> order(aut.state_count());
  for (StateId s = 0; s < aut.state_count(); ++s) order[s] = s;
  std::sort(order.begin(), order.end(), [&aut](StateId a, StateId b) {
    const AutState& x = aut.state_info(a);
    const AutState& y = aut.state_info(b);
    return std::tie(x.node, x.mark) < std::tie(y.node, y.mark);
  });
  std::vector<int> position(aut.state_count());
  for (std::size_t i = 0; i < order.size(); ++i) position[order[i]] = static_cast<int>(i);

  json states = json::array();
  for (StateId s : order)
    states.push_back(json{{"node", rsm.node(aut.state_info(s).node).name},
                          {"mark", aut.state_info(s).mark},
                          {"initial", aut.is_initial(s)},
                          {"final", aut.is_final(s)}});

  struct Row {
    int from;
    std::string label;
    int to;
    json weight;
  };
  std::vector<Row> rows;
  for (TransId t = 0; t < aut.transition_count(); ++t) {
    const AutTransition& tr = aut.transition(t);
    rows.push_back({position[tr.from],
                    tr.label == kEpsilonLabel ? std::string() : rsm.box(tr.label).name,
                    position[tr.to], weight_to_json(aut.semiring(), tr.weight)});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.from, a.label, a.to) < std::tie(b.from, b.label, b.to);
  });
  json transitions = json::array();
  for (const Row& r : rows)
    transitions.push_back(json{{"from", r.from},
                               {"label", r.label.empty() ? json(nullptr) : json(r.label)},
                               {"to", r.to},
                               {"weight", r.weight}});
  return json{{"semiring", aut.semiring().name()}, {"states", states},
              {"transitions", transitions}};
}

inline ConfigAutomaton parse_automaton(const Rsm& rsm, const json& doc) {
  ConfigAutomaton aut(rsm.semiring());
  const json& states = detail::field(doc, "states", "$");
  if (!states.is_array()) detail::bail("$.states", "expected an array");
  std::vector<StateId> by_position;
  for (std::size_t i = 0; i < states.size(); ++i) {
    std::string path = "$.states[" + std::to_string(i) + "]";
    std::string node = detail::str(detail::field(states[i], "node", path), path + ".node");
    auto id = rsm.find_node(node);
    if (!id) detail::bail(path + ".node", "unknown node: " + node);
    const json& mark = detail::field(states[i], "mark", path);
    if (!mark.is_number_integer()) detail::bail(path + ".mark", "expected an integer");
    StateId s = aut.state(*id, mark.get<Mark>());
    if (states[i].value("initial", false)) aut.set_initial(s);
    if (states[i].value("final", false)) aut.set_final(s);
    by_position.push_back(s);
  }
  const json& transitions = detail::field(doc, "transitions", "$");
  if (!transitions.is_array()) detail::bail("$.transitions", "expected an array");
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    std::string path = "$.transitions[" + std::to_string(i) + "]";
    const json& from = detail::field(transitions[i], "from", path);
    const json& to = detail::field(transitions[i], "to", path);
    if (!from.is_number_integer() || !to.is_number_integer())
      detail::bail(path, "from/to must be state indexes");
    std::size_t fi = from.get<std::size_t>(), ti = to.get<std::size_t>();
    if (fi >= by_position.size() || ti >= by_position.size())
      detail::bail(path, "state index out of range");
    const json& label = detail::field(transitions[i], "label", path);
    BoxId box = kEpsilonLabel;
    if (!label.is_null()) {
      auto b = rsm.find_box(detail::str(label, path + ".label"));
      if (!b) detail::bail(path + ".label", "unknown box");
      box = *b;
    }
    Weight w = parse_weight(rsm.semiring(), detail::field(transitions[i], "weight", path),
                            path + ".weight");
    aut.ensure_transition(by_position[fi], box, by_position[ti], w);
  }
  return aut;
}

// -- concurrent documents -----------------------------------------------------------

inline Crsm parse_crsm_document(const json& doc) {
  Crsm crsm;
  crsm.global_states = detail::str_list(detail::field(doc, "global_states", "$"),
                                        "$.global_states");
  if (crsm.global_states.empty()) detail::bail("$.global_states", "need at least one");
  std::string g0 = detail::str(detail::field(doc, "initial_global", "$"), "$.initial_global");
  auto find_global = [&crsm](const std::string& name) -> std::optional<int> {
    for (std::size_t i = 0; i < crsm.global_states.size(); ++i)
      if (crsm.global_states[i] == name) return static_cast<int>(i);
    return std::nullopt;
  };
  auto gi = find_global(g0);
  if (!gi) detail::bail("$.initial_global", "unknown global state: " + g0);
  crsm.initial_global = *gi;

  const json& components = detail::field(doc, "components", "$");
  if (!components.is_array() || components.empty())
    detail::bail("$.components", "expected a non-empty array");
  for (std::size_t ci = 0; ci < components.size(); ++ci) {
    std::string cpath = "$.components[" + std::to_string(ci) + "]";
    CrsmComponentBuilder builder(crsm.global_states);
    const json& modules = detail::field(components[ci], "modules", cpath);
    if (!modules.is_array()) detail::bail(cpath + ".modules", "expected an array");
    std::vector<std::string> module_names;
    for (std::size_t i = 0; i < modules.size(); ++i) {
      std::string path = cpath + ".modules[" + std::to_string(i) + "]";
      module_names.push_back(
          detail::str(detail::field(modules[i], "name", path), path + ".name"));
      builder.add_module(module_names.back());
    }
    auto module_id = [&module_names](const std::string& name) -> ModuleId {
      for (std::size_t i = 0; i < module_names.size(); ++i)
        if (module_names[i] == name) return static_cast<ModuleId>(i);
      return -1;
    };
    for (std::size_t i = 0; i < modules.size(); ++i) {
      std::string path = cpath + ".modules[" + std::to_string(i) + "]";
      ModuleId m = static_cast<ModuleId>(i);
      if (modules[i].contains("entries"))
        for (const auto& n : detail::str_list(modules[i]["entries"], path + ".entries"))
          builder.add_entry(m, n);
      if (modules[i].contains("exits"))
        for (const auto& n : detail::str_list(modules[i]["exits"], path + ".exits"))
          builder.add_exit(m, n);
      if (modules[i].contains("internals"))
        for (const auto& n : detail::str_list(modules[i]["internals"], path + ".internals"))
          builder.add_internal(m, n);
      if (modules[i].contains("boxes")) {
        const json& boxes = modules[i]["boxes"];
        if (!boxes.is_array()) detail::bail(path + ".boxes", "expected an array");
        for (std::size_t b = 0; b < boxes.size(); ++b) {
          std::string bpath = path + ".boxes[" + std::to_string(b) + "]";
          std::string name = detail::str(detail::field(boxes[b], "name", bpath), bpath + ".name");
          std::string callee =
              detail::str(detail::field(boxes[b], "calls", bpath), bpath + ".calls");
          ModuleId callee_id = module_id(callee);
          if (callee_id < 0) detail::bail(bpath + ".calls", "unknown module: " + callee);
          builder.add_box(m, name, callee_id);
        }
      }
      if (modules[i].contains("transitions")) {
        const json& ts = modules[i]["transitions"];
        if (!ts.is_array()) detail::bail(path + ".transitions", "expected an array");
        for (std::size_t t = 0; t < ts.size(); ++t) {
          std::string tpath = path + ".transitions[" + std::to_string(t) + "]";
          std::string from = detail::str(detail::field(ts[t], "from", tpath), tpath + ".from");
          std::string to = detail::str(detail::field(ts[t], "to", tpath), tpath + ".to");
          std::optional<int> guard, update;
          if (ts[t].contains("global")) {
            std::string spec = detail::str(ts[t]["global"], tpath + ".global");
            std::string lhs = spec, rhs;
            if (auto arrow = spec.find("->"); arrow != std::string::npos) {
              lhs = spec.substr(0, arrow);
              rhs = spec.substr(arrow + 2);
              while (!lhs.empty() && lhs.back() == ' ') lhs.pop_back();
              while (!rhs.empty() && rhs.front() == ' ') rhs.erase(rhs.begin());
            }
            guard = find_global(lhs);
            if (!guard) detail::bail(tpath + ".global", "unknown global state: " + lhs);
            if (!rhs.empty()) {
              update = find_global(rhs);
              if (!update) detail::bail(tpath + ".global", "unknown global state: " + rhs);
            }
          }
          builder.add_transition(m, from, to, guard, update);
        }
      }
    }
    const json& init = detail::field(components[ci], "initial", cpath);
    std::string node = detail::str(detail::field(init, "node", cpath + ".initial"),
                                   cpath + ".initial.node");
    std::vector<std::string> stack;
    if (init.contains("stack")) stack = detail::str_list(init["stack"], cpath + ".initial.stack");
    builder.set_initial(node, stack);
    try {
      crsm.components.push_back(builder.build(crsm.initial_global));
    } catch (const std::invalid_argument& e) {
      detail::bail(cpath, e.what());
    }
  }
  return crsm;
}

/// {"global": "g1", "components": [{"node": "err", "stack": []}, ..]} with
/// local node names; the global tag is attached here.
inline GlobalConfig parse_global_config(const Crsm& crsm, const json& doc) {
  GlobalConfig gc;
  std::string g = detail::str(detail::field(doc, "global", "$"), "$.global");
  auto gi = crsm.find_global(g);
  if (!gi) detail::bail("$.global", "unknown global state: " + g);
  gc.global_state = *gi;
  const json& components = detail::field(doc, "components", "$");
  if (!components.is_array() || components.size() != crsm.components.size())
    detail::bail("$.components", "expected one entry per component");
  for (std::size_t i = 0; i < components.size(); ++i) {
    std::string path = "$.components[" + std::to_string(i) + "]";
    const Rsm& rsm = crsm.components[i].rsm;
    std::string local = detail::str(detail::field(components[i], "node", path), path + ".node");
    std::string product = [&]() -> std::string {
      auto dot = local.find('.');
      if (dot == std::string::npos) return g + "@" + local;
      return local.substr(0, dot + 1) + g + "@" + local.substr(dot + 1);
    }();
    auto node = rsm.find_node(product);
    if (!node) detail::bail(path + ".node", "unknown node: " + local + " under " + g);
    Configuration c{*node, {}};
    if (components[i].contains("stack"))
      for (const auto& b : detail::str_list(components[i]["stack"], path + ".stack")) {
        auto box = rsm.find_box(b);
        if (!box) detail::bail(path + ".stack", "unknown box: " + b);
        c.stack.push_back(*box);
      }
    if (!rsm.well_formed(c)) detail::bail(path, "configuration violates the chain condition");
    gc.locals.push_back(std::move(c));
  }
  return gc;
}

}  // namespace rsmdist::io
