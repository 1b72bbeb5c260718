#include "cbn/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "cbn/condition.hpp"
#include "cbn/netio.hpp"
#include "cbn/oracle.hpp"
#include "cbn/restructure.hpp"

namespace cbn {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<VariableId> parse_vars(const BeliefNetwork& net,
                                   const std::string& list) {
  std::vector<VariableId> out;
  for (const std::string& name : split_commas(list))
    out.push_back(net.require_variable(name));
  return out;
}

struct Options {
  std::string net_path;
  std::string ev_path;
  std::string query;
  std::string cutset;
  std::string conditioned_on;
  std::string engine = "clustering";
  std::string form = "factored";
  std::string mode = "parallel";
  std::string output = "text";
  std::string apply;
  bool list_moves = false;
  bool no_islands = false;
  bool no_skip = false;
  int workers = 1;
  long seed = 0;
};

Form parse_form(const std::string& s) {
  if (s == "factored") return Form::factored;
  if (s == "joint") return Form::joint;
  throw Error(ErrorCode::usage, "unknown form: " + s);
}

std::shared_ptr<const BeliefNetwork> load(const Options& opt) {
  BeliefNetwork net = read_network_file(opt.net_path);
  if (!opt.ev_path.empty()) net = read_evidence_file(std::move(net), opt.ev_path);
  ValidationReport report = validate(net);
  if (!report.ok())
    throw Error(ErrorCode::parse,
                "invalid network:\n" + report.to_string());
  return std::make_shared<const BeliefNetwork>(std::move(net));
}

void print_posterior_line(std::ostream& out, bool machine,
                          const BeliefNetwork& net, VariableId v, int state,
                          double value) {
  if (machine)
    out << "posterior." << net.variables[v].name << "."
        << net.variables[v].states[state] << "=" << fmt(value) << "\n";
  else
    out << "P(" << net.variables[v].name << "=" << net.variables[v].states[state]
        << " | e) = " << fmt(value) << "\n";
}

void print_p_evidence(std::ostream& out, bool machine, double p) {
  if (machine)
    out << "p_evidence=" << fmt(p) << "\n";
  else
    out << "P(e) = " << fmt(p) << "\n";
}

// Emits normalized posteriors for each query variable plus the evidence
// probability; throws on impossible evidence.
void emit_marginals(std::ostream& out, bool machine, const BeliefNetwork& net,
                    const std::vector<VariableId>& query,
                    const std::function<Table(VariableId)>& marginal_of,
                    double p_evidence) {
  if (p_evidence <= 0.0)
    throw Error(ErrorCode::impossible_evidence,
                "evidence has probability zero");
  for (VariableId v : query) {
    Table m = marginal_of(v);
    double total = sum_all(m);
    if (total <= 0.0)
      throw Error(ErrorCode::impossible_evidence,
                  "evidence has probability zero");
    for (int s = 0; s < net.card(v); ++s)
      print_posterior_line(out, machine, net, v, s,
                           m[static_cast<std::size_t>(s)] / total);
  }
  print_p_evidence(out, machine, p_evidence);
}

int cmd_validate(const Options& opt, std::ostream& out) {
  BeliefNetwork net = read_network_file(opt.net_path);
  if (!opt.ev_path.empty()) net = read_evidence_file(std::move(net), opt.ev_path);
  ValidationReport report = validate(net);
  bool machine = opt.output == "machine";
  if (machine) out << "violations=" << report.violations.size() << "\n";
  for (const Violation& v : report.violations)
    out << (machine ? "violation=" : "") << v.detail << "\n";
  if (!machine)
    out << (report.ok() ? "network is well-formed" : "network is invalid")
        << "\n";
  return report.ok() ? 0 : 1;
}

void print_tree_report(std::ostream& out, bool machine,
                       const BeliefNetwork& net, const ClusterTree& tree) {
  auto members_str = [&](const std::vector<VariableId>& vars) {
    std::ostringstream os;
    for (std::size_t i = 0; i < vars.size(); ++i)
      os << (i ? "," : "") << net.variables[vars[i]].name;
    return os.str();
  };
  if (machine) {
    out << "clusters=" << tree.cluster_count() << "\n";
    for (int i = 0; i < tree.cluster_count(); ++i) {
      out << "cluster." << i << ".members="
          << members_str(tree.clusters[i].members) << "\n";
      out << "cluster." << i << ".cells="
          << static_cast<std::size_t>(tree.cluster_weight(i, net)) << "\n";
    }
    for (std::size_t a = 0; a < tree.arcs.size(); ++a)
      out << "arc." << a << "=" << tree.arcs[a].first << "-"
          << tree.arcs[a].second << ":" << members_str(tree.sepsets[a]) << "\n";
    out << "total_cells=" << tree.total_cells(net) << "\n";
    out << "max_cluster_size=" << tree.max_cluster_size() << "\n";
  } else {
    out << "clusters (" << tree.cluster_count() << "):\n";
    for (int i = 0; i < tree.cluster_count(); ++i)
      out << "  " << i << ": {" << members_str(tree.clusters[i].members)
          << "}  cells=" << static_cast<std::size_t>(tree.cluster_weight(i, net))
          << "\n";
    out << "arcs (" << tree.arcs.size() << "):\n";
    for (std::size_t a = 0; a < tree.arcs.size(); ++a)
      out << "  " << tree.arcs[a].first << " - " << tree.arcs[a].second
          << "  sep={" << members_str(tree.sepsets[a]) << "}\n";
    out << "total state space: " << tree.total_cells(net) << " cells\n";
    out << "max cluster cardinality: " << tree.max_cluster_size() << "\n";
  }
}

int cmd_compile(const Options& opt, std::ostream& out) {
  auto net = load(opt);
  ClusterTree tree;
  if (!opt.conditioned_on.empty()) {
    std::vector<VariableId> K = parse_vars(*net, opt.conditioned_on);
    tree = global_master_tree(*net, K);
  } else {
    tree = compile_network(*net);
  }
  ValidationReport check = verify_cluster_tree(*net, tree);
  if (!check.ok())
    throw Error(ErrorCode::internal,
                "compiled tree failed verification:\n" + check.to_string());
  print_tree_report(out, opt.output == "machine", *net, tree);
  return 0;
}

int cmd_infer(const Options& opt, std::ostream& out) {
  auto net = load(opt);
  bool machine = opt.output == "machine";
  std::vector<VariableId> query = parse_vars(*net, opt.query);
  if (query.empty()) throw Error(ErrorCode::usage, "infer needs --query");
  Form form = parse_form(opt.form);

  if (opt.engine == "clustering" || opt.engine == "polytree") {
    if (!opt.cutset.empty())
      throw Error(ErrorCode::usage,
                  "--cutset applies to the cutset and global engines");
    ClusterTree tree = opt.engine == "polytree" ? polytree_cluster_tree(*net)
                                                : compile_network(*net);
    EngineState state(net, std::move(tree), form);
    emit_marginals(
        out, machine, *net, query,
        [&](VariableId v) { return state.query_marginal({v}); },
        state.prob_evidence());
    return 0;
  }
  if (opt.engine != "cutset" && opt.engine != "global")
    throw Error(ErrorCode::usage, "unknown engine: " + opt.engine);

  std::vector<VariableId> K = opt.cutset.empty() ? default_cutset(*net)
                                                 : parse_vars(*net, opt.cutset);
  ConditionOptions copt;
  copt.form = form;
  copt.workers = opt.workers;
  copt.use_islands = !opt.no_islands;
  copt.skip_zero_islands = !opt.no_skip;
  if (opt.mode == "serial") {
    copt.mode = ConditionMode::serial;
    // One serial pass per query variable; only the accumulator persists.
    double p_evidence = -1.0;
    std::vector<Table> marginals;
    for (VariableId v : query) {
      ConditionOptions one = copt;
      one.query = {v};
      ConditionResult r = opt.engine == "cutset"
                              ? loop_cutset_infer(net, K, one)
                              : run_global(net, K, one);
      p_evidence = r.p_evidence;
      marginals.push_back(*r.query_joint);
    }
    emit_marginals(
        out, machine, *net, query,
        [&](VariableId v) {
          for (std::size_t i = 0; i < query.size(); ++i)
            if (query[i] == v) return marginals[i];
          throw Error(ErrorCode::internal, "query variable lost");
        },
        p_evidence);
    return 0;
  }
  if (opt.mode != "parallel")
    throw Error(ErrorCode::usage, "unknown mode: " + opt.mode);
  ConditionResult r = opt.engine == "cutset" ? loop_cutset_infer(net, K, copt)
                                             : run_global(net, K, copt);
  emit_marginals(
      out, machine, *net, query,
      [&](VariableId v) { return r.master->query_marginal({v}); },
      r.p_evidence);
  return 0;
}

int cmd_condition(const Options& opt, std::ostream& out) {
  auto net = load(opt);
  bool machine = opt.output == "machine";
  std::vector<VariableId> K = opt.cutset.empty() ? default_cutset(*net)
                                                 : parse_vars(*net, opt.cutset);
  ConditionOptions copt;
  copt.form = parse_form(opt.form);
  copt.workers = opt.workers;
  copt.use_islands = !opt.no_islands;
  copt.skip_zero_islands = !opt.no_skip;
  std::vector<VariableId> query =
      opt.query.empty() ? std::vector<VariableId>{} : parse_vars(*net, opt.query);
  if (opt.mode == "serial") {
    copt.mode = ConditionMode::serial;
    if (query.empty())
      throw Error(ErrorCode::usage, "serial mode needs --query");
    copt.query = query;
    ConditionResult r = run_global(net, K, copt);
    if (machine) {
      out << "instantiations=" << r.instantiations << "\n";
      out << "skipped=" << r.skipped << "\n";
      for (std::size_t t = 0; t < r.details.size(); ++t)
        out << "instantiation." << t << ".islands=" << r.details[t].island_count
            << "\n";
      out << "peak_table_bytes=" << r.peak_table_bytes << "\n";
    } else {
      out << "instantiations: " << r.instantiations << " (skipped "
          << r.skipped << ")\n";
      out << "peak table bytes beyond inputs: " << r.peak_table_bytes << "\n";
    }
    emit_marginals(
        out, machine, *net, query,
        [&](VariableId v) { return marginalize(*r.query_joint, {v}); },
        r.p_evidence);
    return 0;
  }
  if (opt.mode != "parallel")
    throw Error(ErrorCode::usage, "unknown mode: " + opt.mode);
  ConditionResult r = run_global(net, K, copt);
  if (machine) {
    out << "instantiations=" << r.instantiations << "\n";
    out << "skipped=" << r.skipped << "\n";
    for (std::size_t t = 0; t < r.details.size(); ++t)
      out << "instantiation." << t << ".islands=" << r.details[t].island_count
          << "\n";
    out << "master_table_bytes=" << r.master_table_bytes << "\n";
  } else {
    out << "instantiations: " << r.instantiations << " (skipped " << r.skipped
        << ")\n";
    std::ostringstream islands;
    for (std::size_t t = 0; t < r.details.size(); ++t)
      islands << (t ? " " : "") << r.details[t].island_count;
    out << "islands per instantiation: " << islands.str() << "\n";
    out << "master table bytes: " << r.master_table_bytes << "\n";
  }
  if (!query.empty())
    emit_marginals(
        out, machine, *net, query,
        [&](VariableId v) { return r.master->query_marginal({v}); },
        r.p_evidence);
  else
    print_p_evidence(out, machine, r.p_evidence);
  return 0;
}

int cmd_restructure(const Options& opt, std::ostream& out) {
  auto net = load(opt);
  bool machine = opt.output == "machine";
  ClusterTree tree = compile_network(*net);
  if (opt.list_moves || opt.apply.empty()) {
    std::vector<RestructureMove> moves = flexible_moves(tree);
    if (machine) out << "moves=" << moves.size() << "\n";
    for (std::size_t i = 0; i < moves.size(); ++i) {
      if (machine)
        out << "move." << i << "=" << moves[i].old_a << "," << moves[i].old_b
            << ":" << moves[i].new_a << "," << moves[i].new_b << "\n";
      else
        out << "replace arc (" << moves[i].old_a << "," << moves[i].old_b
            << ") by (" << moves[i].new_a << "," << moves[i].new_b << ")\n";
    }
    if (!machine && moves.empty()) out << "no flexible arcs\n";
    return 0;
  }
  // --apply OLD_I,OLD_J:NEW_A,NEW_B
  auto colon = opt.apply.find(':');
  if (colon == std::string::npos)
    throw Error(ErrorCode::usage, "--apply OLD_I,OLD_J:NEW_A,NEW_B");
  auto old_pair = split_commas(opt.apply.substr(0, colon));
  auto new_pair = split_commas(opt.apply.substr(colon + 1));
  if (old_pair.size() != 2 || new_pair.size() != 2)
    throw Error(ErrorCode::usage, "--apply OLD_I,OLD_J:NEW_A,NEW_B");
  RestructureMove move;
  try {
    move.old_a = std::stoi(old_pair[0]);
    move.old_b = std::stoi(old_pair[1]);
    move.new_a = std::stoi(new_pair[0]);
    move.new_b = std::stoi(new_pair[1]);
  } catch (const std::exception&) {
    throw Error(ErrorCode::usage, "--apply wants cluster indices");
  }
  move.arc = -1;
  for (std::size_t a = 0; a < tree.arcs.size(); ++a) {
    if (tree.arcs[a] == std::make_pair(move.old_a, move.old_b)) move.arc = static_cast<int>(a);
    if (tree.arcs[a] == std::make_pair(move.old_b, move.old_a)) {
      move.arc = static_cast<int>(a);
      std::swap(move.old_a, move.old_b);
    }
  }
  if (move.arc < 0)
    throw Error(ErrorCode::precondition, "no arc between those clusters");
  EngineState state(net, tree, Form::factored);
  // new_a must sit on old_a's side; try the swap if the user listed them in
  // the other order.
  try {
    apply_move(state, move);
  } catch (const Error&) {
    std::swap(move.new_a, move.new_b);
    apply_move(state, move);
  }
  ValidationReport check = verify_cluster_tree(*net, state.tree());
  if (!check.ok())
    throw Error(ErrorCode::internal,
                "tree failed verification after move:\n" + check.to_string());
  if (!machine) out << "applied; tree remains valid\n";
  print_tree_report(out, machine, *net, state.tree());
  return 0;
}

int cmd_oracle(const Options& opt, std::ostream& out) {
  auto net = load(opt);
  bool machine = opt.output == "machine";
  std::vector<VariableId> query = parse_vars(*net, opt.query);
  if (query.empty()) throw Error(ErrorCode::usage, "oracle needs --query");
  double p_evidence = sum_all(oracle_marginal(*net, {}));
  emit_marginals(
      out, machine, *net, query,
      [&](VariableId v) { return oracle_marginal(*net, {v}); }, p_evidence);
  return 0;
}

int cmd_compare(const Options& opt, std::ostream& out) {
  auto net = load(opt);
  bool machine = opt.output == "machine";
  std::vector<VariableId> query;
  if (opt.query.empty()) {
    for (int v = 0; v < net->size(); ++v) query.push_back(v);
  } else {
    query = parse_vars(*net, opt.query);
  }
  double oracle_p = sum_all(oracle_marginal(*net, {}));
  if (oracle_p <= 0.0)
    throw Error(ErrorCode::impossible_evidence, "evidence has probability zero");
  std::vector<std::vector<double>> truth;
  for (VariableId v : query) {
    Table m = oracle_marginal(*net, {v});
    std::vector<double> probs;
    for (std::size_t i = 0; i < m.cells(); ++i) probs.push_back(m[i] / oracle_p);
    truth.push_back(std::move(probs));
  }

  std::vector<VariableId> K = opt.cutset.empty() ? default_cutset(*net)
                                                 : parse_vars(*net, opt.cutset);
  struct EngineRun {
    std::string name;
    std::function<Table(VariableId)> marginal;
    double p_evidence;
  };
  std::vector<EngineRun> engines;

  EngineState factored(net, compile_network(*net), Form::factored);
  engines.push_back({"clustering-factored",
                     [&](VariableId v) { return factored.query_marginal({v}); },
                     factored.prob_evidence()});
  EngineState joint(net, compile_network(*net), Form::joint);
  engines.push_back({"clustering-joint",
                     [&](VariableId v) { return joint.query_marginal({v}); },
                     joint.prob_evidence()});
  std::optional<EngineState> poly;
  if (is_singly_connected(*net)) {
    poly.emplace(net, polytree_cluster_tree(*net), Form::factored);
    engines.push_back({"polytree",
                       [&](VariableId v) { return poly->query_marginal({v}); },
                       poly->prob_evidence()});
  }
  ConditionOptions copt;
  copt.workers = opt.workers;
  ConditionResult cutset_run = loop_cutset_infer(net, K, copt);
  engines.push_back(
      {"cutset",
       [&](VariableId v) { return cutset_run.master->query_marginal({v}); },
       cutset_run.p_evidence});
  ConditionResult global_run = run_global(net, K, copt);
  engines.push_back(
      {"global",
       [&](VariableId v) { return global_run.master->query_marginal({v}); },
       global_run.p_evidence});

  double overall = 0.0;
  for (const EngineRun& engine : engines) {
    double dev = std::abs(engine.p_evidence - oracle_p);
    for (std::size_t qi = 0; qi < query.size(); ++qi) {
      Table m = engine.marginal(query[qi]);
      double total = sum_all(m);
      for (std::size_t s = 0; s < m.cells(); ++s)
        dev = std::max(dev, std::abs(m[s] / total - truth[qi][s]));
    }
    overall = std::max(overall, dev);
    if (machine)
      out << "dev." << engine.name << "=" << fmt(dev) << "\n";
    else
      out << engine.name << ": max abs deviation " << fmt(dev) << "\n";
  }
  if (machine)
    out << "max_dev=" << fmt(overall) << "\n";
  else
    out << "max deviation across engines = " << fmt(overall) << "\n";
  return 0;
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"exact inference on discrete belief networks"};
  app.require_subcommand(1);
  Options opt;
  if (const char* env = std::getenv("CLUSTER_INFER_SEED")) opt.seed = std::atol(env);

  auto add_common = [&](CLI::App* sub, bool needs_net) {
    auto* net_opt = sub->add_option("--net", opt.net_path, "network file (.bnet)");
    if (needs_net) net_opt->required();
    sub->add_option("--ev", opt.ev_path, "evidence file (.bev)");
    sub->add_option("--output", opt.output, "text|machine")
        ->check(CLI::IsMember({"text", "machine"}));
    sub->add_option("--seed", opt.seed,
                    "reproducibility tag (CLUSTER_INFER_SEED overrides)");
  };

  CLI::App* validate_cmd = app.add_subcommand("validate", "check a network file");
  add_common(validate_cmd, true);

  CLI::App* compile_cmd = app.add_subcommand("compile", "build a cluster tree");
  add_common(compile_cmd, true);
  compile_cmd->add_option("--conditioned-on", opt.conditioned_on,
                          "build the master tree for this conditioning set");

  CLI::App* infer_cmd = app.add_subcommand("infer", "posterior marginals");
  add_common(infer_cmd, true);
  infer_cmd->add_option("--query", opt.query, "variables (comma separated)")
      ->required();
  infer_cmd->add_option("--form", opt.form, "factored|joint")
      ->check(CLI::IsMember({"factored", "joint"}));
  infer_cmd
      ->add_option("--engine", opt.engine, "clustering|polytree|cutset|global")
      ->check(CLI::IsMember({"clustering", "polytree", "cutset", "global"}));
  infer_cmd->add_option("--cutset", opt.cutset, "conditioning set");
  infer_cmd->add_option("--mode", opt.mode, "parallel|serial")
      ->check(CLI::IsMember({"parallel", "serial"}));
  infer_cmd->add_option("--workers", opt.workers, "parallel workers");

  CLI::App* condition_cmd =
      app.add_subcommand("condition", "conditioning run with statistics");
  add_common(condition_cmd, true);
  condition_cmd->add_option("--cutset", opt.cutset, "conditioning set");
  condition_cmd->add_option("--mode", opt.mode, "parallel|serial")
      ->check(CLI::IsMember({"parallel", "serial"}));
  condition_cmd->add_option("--workers", opt.workers, "parallel workers");
  condition_cmd->add_option("--query", opt.query, "variables (comma separated)");
  condition_cmd->add_option("--form", opt.form, "factored|joint")
      ->check(CLI::IsMember({"factored", "joint"}));
  condition_cmd->add_flag("--no-islands", opt.no_islands,
                          "propagate scalar separators instead of islands");
  condition_cmd->add_flag("--no-skip", opt.no_skip,
                          "process impossible instantiations anyway");

  CLI::App* restructure_cmd =
      app.add_subcommand("restructure", "list or apply arc replacements");
  add_common(restructure_cmd, true);
  restructure_cmd->add_flag("--list", opt.list_moves, "list legal moves");
  restructure_cmd->add_option("--apply", opt.apply, "OLD_I,OLD_J:NEW_A,NEW_B");

  CLI::App* oracle_cmd =
      app.add_subcommand("oracle", "brute-force enumeration answers");
  add_common(oracle_cmd, true);
  oracle_cmd->add_option("--query", opt.query, "variables (comma separated)")
      ->required();

  CLI::App* compare_cmd =
      app.add_subcommand("compare", "run all engines against the oracle");
  add_common(compare_cmd, true);
  compare_cmd->add_option("--query", opt.query, "variables (default: all)");
  compare_cmd->add_option("--cutset", opt.cutset, "conditioning set");
  compare_cmd->add_option("--workers", opt.workers, "parallel workers");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return 1;
  }

  try {
    if (*validate_cmd) return cmd_validate(opt, out);
    if (*compile_cmd) return cmd_compile(opt, out);
    if (*infer_cmd) return cmd_infer(opt, out);
    if (*condition_cmd) return cmd_condition(opt, out);
    if (*restructure_cmd) return cmd_restructure(opt, out);
    if (*oracle_cmd) return cmd_oracle(opt, out);
    if (*compare_cmd) return cmd_compare(opt, out);
    err << "no subcommand\n";
    return 1;
  } catch (const Error& e) {
    err << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::impossible_evidence:
        return 2;
      case ErrorCode::uncoverable_query:
        return 3;
      case ErrorCode::invalid_cutset:
        return 4;
      default:
        return 1;
    }
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return 1;
  }
}

}  // namespace cbn
