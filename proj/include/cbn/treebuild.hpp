#pragma once

#include <utility>
#include <vector>

#include "cbn/network.hpp"

namespace cbn {

struct Cluster {
  std::vector<VariableId> members;  // sorted ascending, nonempty
  bool contains(VariableId v) const;
  bool contains_all(const std::vector<VariableId>& vars) const;
};

/// A forest of clusters with the running-intersection (join) property, every
/// family covered, and each distribution/finding assigned to exactly one
/// covering cluster. Arc indices are stable: restructuring replaces an arc's
/// endpoints in place so per-arc tables keep their slot.
struct ClusterTree {
  std::vector<Cluster> clusters;
  std::vector<std::pair<int, int>> arcs;
  std::vector<std::vector<VariableId>> sepsets;  // per arc, sorted
  std::vector<int> cpt_owner;      // variable id -> cluster, -1 unassigned
  std::vector<int> finding_owner;  // evidence index -> cluster, -1 unassigned

  int cluster_count() const { return static_cast<int>(clusters.size()); }
  /// Per cluster: list of (neighbor cluster, arc index).
  std::vector<std::vector<std::pair<int, int>>> adjacency() const;
  double cluster_weight(int i, const BeliefNetwork& net) const;
  int smallest_cluster_containing(const std::vector<VariableId>& vars,
                                  const BeliefNetwork& net) const;
  std::size_t total_cells(const BeliefNetwork& net) const;
  int max_cluster_size() const;
  std::vector<VariableId> intersection(int i, int j) const;
};

using EliminationOrder = std::vector<VariableId>;

/// Chordality test by maximum-cardinality search plus the standard
/// perfect-elimination check.
bool is_chordal(const UndirectedGraph& g);

/// Min-fill elimination. Ties go to the smaller resulting clique weight
/// (product of state counts), then the lowest id, so identical inputs give
/// identical fills. Returns the filled graph and the elimination order, which
/// is a perfect elimination order of the result.
std::pair<UndirectedGraph, EliminationOrder> triangulate(
    const UndirectedGraph& g, const std::vector<int>& card);

/// Maximal cliques of a chordal graph, listed in elimination order.
/// Throws if `order` is not a perfect elimination order for g.
std::vector<Cluster> max_cliques(const UndirectedGraph& g,
                                 const EliminationOrder& order);

/// Maximum-weight spanning forest over the clique graph, weight = |S_i ∩ S_j|.
/// Candidate arcs with empty intersections are never used, so disconnected
/// inputs yield forests. Tie order: larger sepset, smaller combined cluster
/// weight, lexicographic pair.
ClusterTree build_join_tree(std::vector<Cluster> clusters,
                            const BeliefNetwork& net);

ValidationReport verify_cluster_tree(const BeliefNetwork& net,
                                     const ClusterTree& tree);

/// Place every distribution and finding in the smallest-weight covering
/// cluster (ties to the lowest cluster index). Throws when a finding fits in
/// no cluster.
ClusterTree assign_potentials(const BeliefNetwork& net, ClusterTree tree);

/// Full pipeline: moralize, triangulate, extract cliques, join, assign.
ClusterTree compile_network(const BeliefNetwork& net);

/// One cluster per family, arcs mirroring the network arcs. Requires a
/// singly connected network.
ClusterTree polytree_cluster_tree(const BeliefNetwork& net);

/// Clusters = {j} ∪ (parents of j after cutting K's outgoing arcs) ∪ K, with
/// arcs mirroring the cut network; a valid cluster tree for the original
/// network. Requires K to be a loop cutset.
ClusterTree cutset_cluster_tree(const BeliefNetwork& net,
                                const std::vector<VariableId>& K);

/// Union K into every cluster and separator. Components of a forest are
/// chained together when K is nonempty, since they then share K.
ClusterTree conditioned_cluster_tree(ClusterTree tree,
                                     const std::vector<VariableId>& K,
                                     const BeliefNetwork& net);

/// True iff cutting the outgoing arcs of K leaves a singly connected network.
bool verify_cutset(const BeliefNetwork& net, const std::vector<VariableId>& K);

/// Master tree for conditioning on K: compile the cut network with the K
/// nodes removed, then union K back into every cluster and separator.
ClusterTree global_master_tree(const BeliefNetwork& net,
                               const std::vector<VariableId>& K);

}  // namespace cbn
