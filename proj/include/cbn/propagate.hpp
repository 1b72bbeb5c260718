#pragma once

#include <array>
#include <memory>
#include <vector>

#include "cbn/table.hpp"
#include "cbn/treebuild.hpp"

namespace cbn {

/// Message representation: factored keeps one cached message per directed
/// arc; joint keeps calibrated cluster posteriors plus the last separator
/// posterior sent on each arc, updated by element-wise ratios.
enum class Form { factored, joint };

struct PropagationStats {
  long messages_computed = 0;
  long sends_skipped = 0;
  std::vector<std::pair<int, int>> computed;  // directed (from, to) log
  void reset() {
    messages_computed = 0;
    sends_skipped = 0;
    computed.clear();
  }
};

class EngineState;
EngineState instantiate_tree(const EngineState& master, const Assignment& x_k);

/// Joint-form state whose posterior and separator tables are installed
/// directly (used to assemble a master tree from accumulated instantiation
/// results). The installed posteriors carry the global evidence mass, so
/// cross-component scaling is disabled on the result.
EngineState make_calibrated_state(std::shared_ptr<const BeliefNetwork> net,
                                  ClusterTree tree,
                                  std::vector<Table> posteriors,
                                  std::vector<Table> sep_posteriors);

/// Mutable propagation state over one cluster tree. A state is
/// single-threaded; distinct states over distinct trees are independent and
/// share the network read-only.
///
/// Posteriors are kept unnormalized (they integrate to the evidence
/// probability); normalization happens at query output only. There is no
/// log-space rescaling, so extremely small evidence probabilities can
/// underflow; that is an accepted limit of the dense representation.
class EngineState {
 public:
  EngineState(std::shared_ptr<const BeliefNetwork> net, ClusterTree tree,
              Form form, Assignment conditioning = {},
              unsigned schedule_seed = 0);

  const ClusterTree& tree() const { return tree_; }
  const BeliefNetwork& network() const { return *net_; }
  Form form() const { return form_; }

  /// Rebuild every cluster potential as the product of its assigned
  /// distributions, findings and still-active runtime findings (sliced at
  /// the construction-time conditioning assignment, if any). Clusters with
  /// no factors hold scalar 1 and stay unmarked.
  void initialize();

  /// Factored-form message over the separator of arc (i, j), computed
  /// demand-driven from the sender's potential and its other incoming
  /// messages; cached until something on i's side changes.
  Table message(int i, int j);

  /// Pull messages inward so the posterior of cluster i is available.
  void collect(int i);

  /// Push messages outward from i; afterwards every cluster posterior in
  /// i's component is consistent.
  void distribute(int i);

  /// Collect + distribute at one root per component (over enabled arcs).
  void propagate();

  /// Separator posterior on arc (i, j): product of the two directed messages
  /// (factored) or the stored separator table (joint).
  Table sepset_posterior(int i, int j);

  const Table& posterior(int i);

  /// Unnormalized Pr{query, evidence}; the query must fit in one cluster.
  /// Disconnected components contribute their evidence mass as a factor.
  Table query_marginal(const std::vector<VariableId>& J);

  /// Evidence probability; equals the total mass of any cluster posterior
  /// within a component, multiplied across components.
  double prob_evidence();

  /// Multiplies the finding into its covering cluster; returns a handle for
  /// retraction. Throws when the scope fits in no cluster.
  int enter_finding(const LikelihoodFinding& f);

  /// Factored form divides the finding back out where possible and falls
  /// back to reinitialization when that would divide by zero; joint form
  /// always reinitializes.
  void retract_finding(int handle);

  bool changed(int i) const { return changed_[i] != 0; }
  int last_changed() const { return last_changed_; }
  bool is_propagated() const { return propagated_; }

  PropagationStats& stats() { return stats_; }
  const PropagationStats& stats() const { return stats_; }

  /// Total payload bytes of all tables this state holds.
  std::size_t table_bytes() const;

  const Table& psi(int i) const { return psi_[i]; }
  Scope cluster_scope(int i) const;
  Scope sepset_scope(int arc) const;

  // Arc gating, used to propagate within islands only.
  void set_arc_enabled(int arc, bool enabled) { arc_enabled_[arc] = enabled; }
  bool arc_enabled(int arc) const { return arc_enabled_[arc] != 0; }
  void enable_all_arcs();

  /// Connected components over enabled arcs; returns one representative
  /// (lowest cluster index) per component.
  std::vector<int> component_roots();

  // Restructuring hooks. replace_arc swaps an arc's endpoints in place; the
  // per-arc tables keep their slot, so transferred messages stay valid.
  void replace_arc(int arc, int new_a, int new_b);
  void mark_arc_stale(int arc);

  friend EngineState instantiate_tree(const EngineState& master,
                                      const Assignment& x_k);
  friend EngineState make_calibrated_state(
      std::shared_ptr<const BeliefNetwork> net, ClusterTree tree,
      std::vector<Table> posteriors, std::vector<Table> sep_posteriors);

 private:
  int arc_between(int i, int j) const;
  int direction_slot(int arc, int from) const;
  void rebuild_adjacency();
  void invalidate_from(int cluster);
  void compute_posterior_factored(int i);
  void joint_collect(int node, int from_arc);
  void joint_distribute(int node, int from_arc);
  void factored_distribute(int node, int from_arc);
  void send_joint(int i, int j);
  void component_of(int root, std::vector<int>* out);
  double component_mass(int root);
  Table sliced_factor(const Table& t) const;

  std::shared_ptr<const BeliefNetwork> net_;
  ClusterTree tree_;
  Form form_;
  Assignment conditioning_;
  unsigned schedule_seed_ = 0;

  std::vector<std::vector<std::pair<int, int>>> adj_;  // (neighbor, arc)
  std::vector<Table> psi_;
  std::vector<Table> post_;
  std::vector<char> post_fresh_;
  std::vector<std::array<Table, 2>> msg_;  // slot 0: first->second
  std::vector<Table> sep_old_;             // joint form
  std::vector<std::array<char, 2>> fresh_;
  std::vector<char> arc_enabled_;
  std::vector<char> changed_;
  int last_changed_ = -1;
  bool propagated_ = false;
  bool global_posteriors_ = false;  // accumulated masters: no component scaling
  PropagationStats stats_;

  struct Entered {
    LikelihoodFinding finding;
    int owner;
    bool active;
  };
  std::vector<Entered> entered_;
};

}  // namespace cbn
