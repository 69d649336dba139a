// Command-line front-end: validation, saturation, distance queries, the
// brute-force reference evaluator, context-bounded reachability, and the
// dense-family benchmark.
//
// Exit codes: 0 success, 1 validation/load failure, 2 usage error,
// 3 non-termination or budget diagnostics.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rsmdist/concurrent.hpp"
#include "rsmdist/extraction.hpp"
#include "rsmdist/io.hpp"
#include "rsmdist/oracle.hpp"
#include "rsmdist/post_star.hpp"
#include "rsmdist/wpds.hpp"

namespace {

using namespace rsmdist;

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io::DocumentError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw io::DocumentError(path + ": " + e.what());
  }
}

Rsm load_rsm(const std::string& path) {
  Rsm rsm = io::parse_rsm_document(load_json(path));
  ValidationReport report = validate(rsm);
  if (!report.ok()) {
    for (const auto& issue : report.issues) std::cerr << path << ": " << issue.message << "\n";
    throw io::DocumentError(path + ": machine is not well-formed");
  }
  return rsm;
}

/// "--init" accepts a configuration ("u1" or "u1[b2,b1]", stack top first)
/// or "entries:<module>" for all entries of a module with the empty stack.
ConfigAutomaton initial_automaton(const Rsm& rsm, const std::string& init) {
  if (init.rfind("entries:", 0) == 0) {
    auto module = rsm.find_module(init.substr(8));
    if (!module) throw io::DocumentError("unknown module in --init: " + init.substr(8));
    return entries_automaton(rsm, *module);
  }
  return singleton_automaton(rsm, io::parse_configuration_text(rsm, init));
}

std::vector<std::pair<Configuration, Weight>> initial_seeds(const Rsm& rsm,
                                                            const std::string& init) {
  std::vector<std::pair<Configuration, Weight>> seeds;
  if (init.rfind("entries:", 0) == 0) {
    auto module = rsm.find_module(init.substr(8));
    if (!module) throw io::DocumentError("unknown module in --init: " + init.substr(8));
    for (NodeId e : rsm.entries(*module)) seeds.push_back({{e, {}}, rsm.semiring().one()});
  } else {
    seeds.push_back({io::parse_configuration_text(rsm, init), rsm.semiring().one()});
  }
  return seeds;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io::DocumentError("cannot write " + path);
  out << text;
}

int run_validate(const std::string& rsm_path) {
  Rsm rsm = io::parse_rsm_document(load_json(rsm_path));
  ValidationReport report = validate(rsm);
  if (!report.ok()) {
    for (const auto& issue : report.issues) std::cerr << issue.message << "\n";
    return 1;
  }
  std::cout << "ok: " << rsm.module_count() << " modules, " << rsm.node_count()
            << " nodes, " << rsm.transition_count() << " transitions\n";
  return 0;
}

int run_post_star(const std::string& rsm_path, const std::string& init,
                  const std::string& out_path, const std::string& dot_path) {
  Rsm rsm = normalize_exit_weights(load_rsm(rsm_path));
  PostStarResult res = post_star(rsm, initial_automaton(rsm, init));
  std::cout << "states=" << res.automaton.state_count()
            << " transitions=" << res.automaton.transition_count()
            << " marks=" << res.automaton.mark_count() << "\n";
  if (!out_path.empty())
    write_file(out_path, io::automaton_to_json(res.automaton, rsm).dump(2) + "\n");
  if (!dot_path.empty()) write_file(dot_path, dot_export(res.automaton, rsm));
  return 0;
}

int run_query(const std::string& rsm_path, const std::string& init,
              const std::string& queries_path) {
  Rsm rsm = normalize_exit_weights(load_rsm(rsm_path));
  const Semiring& sem = rsm.semiring();
  std::vector<io::Query> queries = io::parse_queries(rsm, load_json(queries_path));

  PostStarResult res = post_star(rsm, initial_automaton(rsm, init));
  std::optional<ModuleAutomaton> maut;
  std::optional<std::unordered_map<NodeId, Weight>> nodes;
  std::optional<std::map<std::pair<ModuleId, NodeId>, Weight>> contexts;

  for (const io::Query& q : queries) {
    Weight w = sem.zero();
    switch (q.kind) {
      case io::QueryKind::config:
        w = config_distance(res.automaton, rsm, q.config);
        break;
      case io::QueryKind::superconfig:
        if (!maut) maut.emplace(superconfig_automaton(res.automaton, rsm));
        w = superconfig_distance(*maut, rsm, q.super);
        break;
      case io::QueryKind::node: {
        if (!nodes) nodes.emplace(node_distances(res.automaton, rsm));
        auto it = nodes->find(q.node);
        w = it == nodes->end() ? sem.zero() : it->second;
        break;
      }
      case io::QueryKind::same_context: {
        if (!contexts) contexts.emplace(same_context_distances(rsm));
        auto it = contexts->find({q.module, q.node});
        w = it == contexts->end() ? sem.zero() : it->second;
        break;
      }
    }
    std::cout << io::query_kind_name(q.kind) << " " << q.text << " => " << sem.to_string(w)
              << "\n";
  }
  return 0;
}

int run_oracle(const std::string& rsm_path, const std::string& init,
               const std::string& queries_path) {
  Rsm rsm = normalize_exit_weights(load_rsm(rsm_path));
  const Semiring& sem = rsm.semiring();
  std::vector<io::Query> queries = io::parse_queries(rsm, load_json(queries_path));
  std::vector<Configuration> configs;
  for (const io::Query& q : queries) {
    if (q.kind != io::QueryKind::config)
      throw io::DocumentError("the reference evaluator answers config queries only");
    configs.push_back(q.config);
  }
  OracleResult result = stabilized_distances(rsm, initial_seeds(rsm, init), configs);
  for (const io::Query& q : queries)
    std::cout << "config " << q.text << " => " << sem.to_string(result.at(q.config, sem))
              << "\n";
  return 0;
}

int run_concurrent(const std::string& crsm_path, int k, const std::string& check) {
  Crsm crsm = io::parse_crsm_document(load_json(crsm_path));
  nlohmann::json doc;
  if (check.rfind('@', 0) == 0) {
    doc = load_json(check.substr(1));
  } else {
    try {
      doc = nlohmann::json::parse(check);
    } catch (const nlohmann::json::parse_error& e) {
      throw io::DocumentError(std::string("--check: ") + e.what());
    }
  }
  GlobalConfig gc = io::parse_global_config(crsm, doc);
  GlobalReachSet reach = k_bounded_reach(crsm, k);
  bool ok = is_global_config_reachable(reach, crsm, gc);
  std::cout << (ok ? "reachable" : "unreachable") << "\n";
  return 0;
}

int run_bench(const std::vector<int>& sizes, const std::string& csv_path) {
  std::ostringstream csv;
  csv << "n,confdist_seconds,wpds_seconds,speedup,confdist_ops,wpds_ops\n";
  for (int n : sizes) {
    Rsm rsm = dense_family(n, Semiring::boolean());
    ConfigAutomaton init = singleton_automaton(rsm, {rsm.entries(0)[0], {}});
    auto [pds, map] = rsm_to_wpds(rsm);
    PAutomaton pds_init = p_automaton_from(pds, map, init, rsm);

    auto median3 = [](auto&& run) {
      std::vector<double> times;
      for (int rep = 0; rep < 3; ++rep) {
        auto start = std::chrono::steady_clock::now();
        run();
        std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
        times.push_back(dt.count());
      }
      std::sort(times.begin(), times.end());
      return times[1];
    };

    PostStarStats ours_stats;
    double ours = median3([&] { ours_stats = post_star(rsm, init).stats; });
    PostStarStats theirs_stats;
    double theirs = median3([&] { wpds_post_star(pds, pds_init, &theirs_stats); });

    csv << n << "," << ours << "," << theirs << "," << (theirs / ours) << ","
        << (ours_stats.combines + ours_stats.extends) << ","
        << (theirs_stats.combines + theirs_stats.extends) << "\n";
    std::cerr << "n=" << n << " done\n";
  }
  std::cout << csv.str();
  if (!csv_path.empty()) write_file(csv_path, csv.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semiring distances over weighted recursive state machines"};
  app.require_subcommand(1);

  std::string rsm_path, init, queries_path, out_path, dot_path;
  std::string crsm_path, check;
  std::string sizes_text = "10,20,40,80", csv_path;
  int k = 1;

  CLI::App* validate_cmd = app.add_subcommand("validate", "check a machine document");
  validate_cmd->add_option("rsm", rsm_path, "machine document")->required();

  CLI::App* post_cmd = app.add_subcommand("post-star", "saturate and write the automaton");
  post_cmd->add_option("rsm", rsm_path)->required();
  post_cmd->add_option("--init", init, "initial configuration or entries:<module>")->required();
  post_cmd->add_option("--out", out_path, "write the automaton as JSON");
  post_cmd->add_option("--dot", dot_path, "write the automaton as DOT");

  CLI::App* query_cmd = app.add_subcommand("query", "answer distance queries");
  query_cmd->add_option("rsm", rsm_path)->required();
  query_cmd->add_option("--init", init)->required();
  query_cmd->add_option("--queries", queries_path, "query document")->required();

  CLI::App* oracle_cmd = app.add_subcommand("oracle", "reference evaluator for config queries");
  oracle_cmd->add_option("rsm", rsm_path)->required();
  oracle_cmd->add_option("--init", init)->required();
  oracle_cmd->add_option("--queries", queries_path)->required();

  CLI::App* conc_cmd = app.add_subcommand("concurrent", "context-bounded reachability");
  conc_cmd->add_option("crsm", crsm_path, "concurrent machine document")->required();
  conc_cmd->add_option("-k", k, "context bound (at most k-1 switches)")->required();
  conc_cmd->add_option("--check", check, "global configuration, inline JSON or @file")
      ->required();

  CLI::App* bench_cmd = app.add_subcommand("bench", "compare engines on synthetic machines");
  CLI::App* dense_cmd = bench_cmd->add_subcommand("dense", "the dense recursive family");
  dense_cmd->add_option("--sizes", sizes_text, "comma-separated interface sizes");
  dense_cmd->add_option("--csv", csv_path, "write results as CSV");
  bench_cmd->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*validate_cmd) return run_validate(rsm_path);
    if (*post_cmd) return run_post_star(rsm_path, init, out_path, dot_path);
    if (*query_cmd) return run_query(rsm_path, init, queries_path);
    if (*oracle_cmd) return run_oracle(rsm_path, init, queries_path);
    if (*conc_cmd) return run_concurrent(crsm_path, k, check);
    if (*dense_cmd) {
      std::vector<int> sizes;
      std::stringstream ss(sizes_text);
      std::string item;
      while (std::getline(ss, item, ',')) sizes.push_back(std::stoi(item));
      return run_bench(sizes, csv_path);
    }
  } catch (const NonTerminationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const BudgetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const InconclusiveError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
