#include "cbn/network.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace cbn {

bool ValidationReport::has(ViolationKind k) const {
  for (const auto& v : violations)
    if (v.kind == k) return true;
  return false;
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& v : violations) os << v.detail << "\n";
  return os.str();
}

const Variable* BeliefNetwork::find_variable(std::string_view name) const {
  for (const auto& v : variables)
    if (v.name == name) return &v;
  return nullptr;
}

VariableId BeliefNetwork::require_variable(std::string_view name) const {
  const Variable* v = find_variable(name);
  if (!v)
    throw Error(ErrorCode::parse, "unknown variable: " + std::string(name));
  return v->id;
}

int BeliefNetwork::require_state(VariableId v, std::string_view label) const {
  const auto& states = variables[v].states;
  for (std::size_t i = 0; i < states.size(); ++i)
    if (states[i] == label) return static_cast<int>(i);
  throw Error(ErrorCode::parse, "unknown state '" + std::string(label) +
                                    "' of variable " + variables[v].name);
}

Scope BeliefNetwork::scope_of(std::vector<VariableId> vars) const {
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  Scope s;
  for (VariableId v : vars) {
    s.vars.push_back(v);
    s.card.push_back(card(v));
  }
  return s;
}

VariableId BeliefNetwork::add_variable(std::string name,
                                       std::vector<std::string> states) {
  Variable v;
  v.id = static_cast<VariableId>(variables.size());
  v.name = std::move(name);
  v.states = std::move(states);
  variables.push_back(std::move(v));
  cpts.push_back(Cpt{});
  cpts.back().child = variables.back().id;
  return variables.back().id;
}

void BeliefNetwork::set_parents(VariableId child,
                                std::vector<VariableId> parents) {
  cpts[child].child = child;
  cpts[child].parents = std::move(parents);
}

void BeliefNetwork::set_cpt(VariableId child,
                            const std::vector<double>& values) {
  std::vector<VariableId> order = cpts[child].parents;
  order.push_back(child);
  std::vector<int> cards;
  cards.reserve(order.size());
  for (VariableId v : order) cards.push_back(card(v));
  cpts[child].table = Table::from_ordered(order, cards, values);
}

UndirectedGraph::UndirectedGraph(int nodes)
    : adj_(nodes), active_(nodes, 1) {}

std::vector<int> UndirectedGraph::active_nodes() const {
  std::vector<int> out;
  for (int v = 0; v < node_count(); ++v)
    if (active_[v]) out.push_back(v);
  return out;
}

void UndirectedGraph::drop_node(int v) {
  for (int u : adj_[v]) adj_[u].erase(v);
  adj_[v].clear();
  active_[v] = 0;
}

void UndirectedGraph::add_edge(int a, int b) {
  if (a == b) throw Error(ErrorCode::internal, "self loop");
  adj_[a].insert(b);
  adj_[b].insert(a);
}

void UndirectedGraph::remove_edge(int a, int b) {
  adj_[a].erase(b);
  adj_[b].erase(a);
}

bool UndirectedGraph::has_edge(int a, int b) const {
  return adj_[a].count(b) > 0;
}

std::vector<std::pair<int, int>> UndirectedGraph::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int a = 0; a < node_count(); ++a)
    for (int b : adj_[a])
      if (a < b) out.emplace_back(a, b);
  return out;
}

std::size_t UndirectedGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& s : adj_) n += s.size();
  return n / 2;
}

namespace {

std::string config_name(const BeliefNetwork& net,
                        const std::vector<VariableId>& parents,
                        const std::vector<int>& states) {
  std::ostringstream os;
  for (std::size_t i = 0; i < parents.size(); ++i) {
    if (i) os << ", ";
    os << net.variables[parents[i]].name << "="
       << net.variables[parents[i]].states[states[i]];
  }
  return os.str();
}

}  // namespace

ValidationReport validate(const BeliefNetwork& net) {
  ValidationReport report;
  auto add = [&](ViolationKind k, std::string detail) {
    report.violations.push_back({k, std::move(detail)});
  };

  for (int i = 0; i < net.size(); ++i) {
    const Variable& v = net.variables[i];
    if (v.cardinality() < 1)
      add(ViolationKind::bad_cardinality,
          "variable " + v.name + " has no states");
    std::set<std::string> labels(v.states.begin(), v.states.end());
    if (static_cast<int>(labels.size()) != v.cardinality())
      add(ViolationKind::duplicate_name,
          "variable " + v.name + " repeats a state label");
    for (int j = i + 1; j < net.size(); ++j)
      if (net.variables[j].name == v.name)
        add(ViolationKind::duplicate_name, "duplicate variable name " + v.name);
  }

  if (static_cast<int>(net.cpts.size()) != net.size()) {
    add(ViolationKind::missing_cpt, "expected one distribution per variable");
    return report;
  }

  // Parent-relation cycle check: depth-first with colors.
  {
    std::vector<int> color(net.size(), 0);
    std::vector<int> stack, cycle;
    std::function<bool(int)> dfs = [&](int u) {
      color[u] = 1;
      stack.push_back(u);
      for (VariableId p : net.cpts[u].parents) {
        if (p < 0 || p >= net.size()) continue;
        if (color[p] == 1) {
          auto it = std::find(stack.begin(), stack.end(), p);
          cycle.assign(it, stack.end());
          return true;
        }
        if (color[p] == 0 && dfs(p)) return true;
      }
      stack.pop_back();
      color[u] = 2;
      return false;
    };
    for (int u = 0; u < net.size(); ++u) {
      if (color[u] == 0 && dfs(u)) {
        std::ostringstream os;
        os << "cycle in parent relation:";
        for (int c : cycle) os << " " << net.variables[c].name;
        add(ViolationKind::cycle, os.str());
        break;
      }
    }
  }

  for (int child = 0; child < net.size(); ++child) {
    const Cpt& cpt = net.cpts[child];
    if (cpt.child != child) {
      add(ViolationKind::missing_cpt,
          "no distribution for variable " + net.variables[child].name);
      continue;
    }
    std::vector<VariableId> scope_vars = cpt.parents;
    scope_vars.push_back(child);
    bool scope_ok = true;
    for (VariableId p : scope_vars)
      if (p < 0 || p >= net.size()) scope_ok = false;
    std::set<VariableId> dedup(scope_vars.begin(), scope_vars.end());
    if (dedup.size() != scope_vars.size()) scope_ok = false;
    if (scope_ok && cpt.table.scope() != net.scope_of(scope_vars))
      scope_ok = false;
    if (!scope_ok) {
      add(ViolationKind::scope_mismatch,
          "distribution of " + net.variables[child].name +
              " does not match its declared family");
      continue;
    }
    // Row sums over the child for every parent configuration.
    for (double x : cpt.table.values())
      if (x < 0.0 || x > 1.0 + 1e-12) {
        add(ViolationKind::cpt_value_out_of_range,
            "distribution of " + net.variables[child].name +
                " has an entry outside [0, 1]");
        break;
      }
    std::vector<int> pstate(cpt.parents.size(), 0);
    for (;;) {
      Assignment fix;
      for (std::size_t i = 0; i < cpt.parents.size(); ++i)
        fix.emplace_back(cpt.parents[i], pstate[i]);
      double row = 0.0;
      for (int s = 0; s < net.card(child); ++s) {
        Assignment full = fix;
        full.emplace_back(child, s);
        row += cpt.table[cpt.table.index_of(full)];
      }
      if (std::abs(row - 1.0) > 1e-9)
        add(ViolationKind::cpt_not_normalized,
            "distribution of " + net.variables[child].name + " at [" +
                config_name(net, cpt.parents, pstate) + "] sums to " +
                std::to_string(row));
      int d = static_cast<int>(pstate.size()) - 1;
      while (d >= 0 && ++pstate[d] == net.card(cpt.parents[d])) pstate[d--] = 0;
      if (d < 0) break;
    }
  }

  for (std::size_t k = 0; k < net.evidence.size(); ++k) {
    const LikelihoodFinding& f = net.evidence[k];
    if (f.scope_vars.empty()) {
      add(ViolationKind::bad_finding,
          "finding " + std::to_string(k) + " has empty scope");
      continue;
    }
    bool positive = false;
    for (double x : f.table.values()) {
      if (x < 0.0)
        add(ViolationKind::bad_finding,
            "finding " + std::to_string(k) + " has a negative entry");
      if (x > 0.0) positive = true;
    }
    if (!positive)
      add(ViolationKind::bad_finding,
          "finding " + std::to_string(k) + " is identically zero");
  }
  return report;
}

UndirectedGraph moral_graph(const BeliefNetwork& net) {
  UndirectedGraph g(net.size());
  for (const Cpt& cpt : net.cpts) {
    for (VariableId p : cpt.parents) g.add_edge(p, cpt.child);
    for (std::size_t i = 0; i < cpt.parents.size(); ++i)
      for (std::size_t j = i + 1; j < cpt.parents.size(); ++j)
        if (cpt.parents[i] != cpt.parents[j])
          g.add_edge(cpt.parents[i], cpt.parents[j]);
  }
  return g;
}

BeliefNetwork cut_outgoing_arcs(const BeliefNetwork& net,
                                const std::vector<VariableId>& K) {
  BeliefNetwork out = net;
  std::set<VariableId> cut(K.begin(), K.end());
  for (Cpt& cpt : out.cpts) {
    std::vector<VariableId> kept;
    for (VariableId p : cpt.parents)
      if (!cut.count(p)) kept.push_back(p);
    cpt.parents = std::move(kept);
    // The table keeps its full scope: instantiation happens at conditioning
    // time, not here.
  }
  return out;
}

bool is_singly_connected(const BeliefNetwork& net) {
  std::vector<int> parent(net.size());
  for (int i = 0; i < net.size(); ++i) parent[i] = i;
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Cpt& cpt : net.cpts) {
    for (VariableId p : cpt.parents) {
      int a = find(p), b = find(cpt.child);
      if (a == b) return false;
      parent[a] = b;
    }
  }
  return true;
}

BeliefNetwork add_finding(BeliefNetwork net, LikelihoodFinding finding) {
  for (VariableId v : finding.scope_vars)
    if (v < 0 || v >= net.size())
      throw Error(ErrorCode::parse, "finding references an unknown variable");
  net.evidence.push_back(std::move(finding));
  return net;
}

LikelihoodFinding indicator_finding(const BeliefNetwork& net, VariableId v,
                                    int state) {
  if (v < 0 || v >= net.size())
    throw Error(ErrorCode::parse, "unknown variable id");
  if (state < 0 || state >= net.card(v))
    throw Error(ErrorCode::parse, "state index out of range");
  LikelihoodFinding f;
  f.scope_vars = {v};
  Table t(net.scope_of({v}), 0.0);
  t.cell(static_cast<std::size_t>(state)) = 1.0;
  f.table = std::move(t);
  return f;
}

BeliefNetwork observe(BeliefNetwork net, VariableId v,
                      std::string_view state_label) {
  int state = net.require_state(v, state_label);
  LikelihoodFinding f = indicator_finding(net, v, state);
  return add_finding(std::move(net), std::move(f));
}

}  // namespace cbn
