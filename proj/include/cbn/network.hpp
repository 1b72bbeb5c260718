#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cbn/table.hpp"
#include "cbn/types.hpp"

namespace cbn {

struct Variable {
  VariableId id = -1;
  std::string name;
  std::vector<std::string> states;
  int cardinality() const { return static_cast<int>(states.size()); }
};

/// Conditional distribution of `child` given `parents`. The table is stored
/// in canonical layout (scope sorted ascending, largest id fastest); the
/// parent list keeps its declared order for file round-trips.
struct Cpt {
  VariableId child = -1;
  std::vector<VariableId> parents;
  Table table;
};

/// One piece of evidence: a non-negative likelihood over a variable set.
/// Exact observations are indicator findings over a single variable.
struct LikelihoodFinding {
  std::vector<VariableId> scope_vars;  // sorted ascending
  Table table;
};

enum class ViolationKind {
  duplicate_name,
  bad_cardinality,
  missing_cpt,
  scope_mismatch,
  cpt_not_normalized,
  cpt_value_out_of_range,
  cycle,
  bad_finding,
  // cluster-tree checks
  not_a_forest,
  join_property,
  family_uncovered,
  bad_sepset,
  bad_assignment,
};

struct Violation {
  ViolationKind kind;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  bool has(ViolationKind k) const;
  std::string to_string() const;
};

/// Directed acyclic model over discrete variables. Values are treated as
/// immutable once built; every operation below returns a new network or a
/// report, so networks can be shared read-only across workers.
struct BeliefNetwork {
  std::string name;
  std::vector<Variable> variables;
  std::vector<Cpt> cpts;  // indexed by child id
  std::vector<LikelihoodFinding> evidence;

  int size() const { return static_cast<int>(variables.size()); }
  int card(VariableId v) const { return variables[v].cardinality(); }
  const Variable* find_variable(std::string_view name) const;
  VariableId require_variable(std::string_view name) const;
  int require_state(VariableId v, std::string_view label) const;

  /// Scope over the given variables (sorted, deduplicated).
  Scope scope_of(std::vector<VariableId> vars) const;

  // Builders, used by the file reader and by tests. After construction the
  // value is treated as immutable.
  VariableId add_variable(std::string name, std::vector<std::string> states);
  void set_parents(VariableId child, std::vector<VariableId> parents);
  /// Values laid out with the declared parents slowest-to-fastest and the
  /// child fastest within each parent configuration.
  void set_cpt(VariableId child, const std::vector<double>& values);
};

/// Simple undirected graph over variable ids with an explicit active-node
/// set, so induced subgraphs keep stable ids.
class UndirectedGraph {
 public:
  UndirectedGraph() = default;
  explicit UndirectedGraph(int nodes);

  int node_count() const { return static_cast<int>(adj_.size()); }
  bool active(int v) const { return active_[v]; }
  std::vector<int> active_nodes() const;
  void drop_node(int v);

  void add_edge(int a, int b);
  void remove_edge(int a, int b);
  bool has_edge(int a, int b) const;
  const std::set<int>& neighbors(int v) const { return adj_[v]; }
  std::vector<std::pair<int, int>> edges() const;  // a < b, sorted
  std::size_t edge_count() const;

 private:
  std::vector<std::set<int>> adj_;
  std::vector<char> active_;
};

ValidationReport validate(const BeliefNetwork& net);

/// Undirect every arc and link all co-parents of each node.
UndirectedGraph moral_graph(const BeliefNetwork& net);

/// Remove every k in K from the parent list of every other node. CPTs of the
/// affected children keep their full scope; conditioning instantiates them
/// later.
BeliefNetwork cut_outgoing_arcs(const BeliefNetwork& net,
                                const std::vector<VariableId>& K);

/// True iff the undirected skeleton of the arcs is a forest.
bool is_singly_connected(const BeliefNetwork& net);

BeliefNetwork add_finding(BeliefNetwork net, LikelihoodFinding finding);
BeliefNetwork observe(BeliefNetwork net, VariableId v,
                      std::string_view state_label);

/// Indicator finding for an exact observation.
LikelihoodFinding indicator_finding(const BeliefNetwork& net, VariableId v,
                                    int state);

}  // namespace cbn
