#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "cbn/propagate.hpp"

namespace cbn {

/// Group of clusters that stays connected in an instantiated tree once the
/// separators swallowed by the conditioning set become empty.
struct Island {
  std::vector<int> clusters;  // ascending cluster indices
  double scalar = 1.0;        // evidence mass local to the island
};

enum class ConditionMode { parallel, serial };

struct ConditionOptions {
  ConditionMode mode = ConditionMode::parallel;
  Form form = Form::factored;  // used inside each instantiated tree
  int workers = 1;
  bool use_islands = true;
  bool skip_zero_islands = true;
  std::vector<VariableId> query;  // serial mode accumulates Pr{query, e}
};

struct InstantiationInfo {
  Assignment x;
  int island_count = 0;
  bool skipped = false;
};

struct ConditionResult {
  std::optional<EngineState> master;  // parallel mode: accumulated master
  std::optional<Table> query_joint;   // serial mode: Pr{query, e}
  double p_evidence = 0.0;
  long instantiations = 0;
  long skipped = 0;
  std::vector<InstantiationInfo> details;
  std::size_t peak_table_bytes = 0;    // serial mode: beyond the inputs
  std::size_t master_table_bytes = 0;  // parallel mode: master state payload
};

/// Copy of the master state with the conditioning variables fixed: every
/// table sliced at x_k, the variables removed from clusters and separators,
/// and each cluster that lost variables marked changed.
EngineState instantiate_tree(const EngineState& master, const Assignment& x_k);

/// Partition of the clusters into islands: connected components over arcs
/// whose instantiated separator is nonempty. Empty-separator arcs are
/// returned as the island-tree arcs.
std::vector<Island> find_islands(const ClusterTree& instantiated,
                                 std::vector<int>* island_arcs = nullptr);

/// Propagate within each island (empty-separator arcs disabled), fill in the
/// island scalars, and return the per-island update factor: the product of
/// every other island's scalar, to be applied exactly once per table.
std::vector<double> island_propagate(EngineState& state,
                                     std::vector<Island>& islands);

/// True when some island scalar is zero: the instantiation contradicts the
/// evidence and the whole tree can be dropped.
bool zero_island_skip(const std::vector<Island>& islands);

/// Row-major enumeration of the conditioning set (largest id fastest).
std::vector<Assignment> enumerate_instantiations(
    const BeliefNetwork& net, const std::vector<VariableId>& K);

/// Condition on K over the given master tree and accumulate per-instantiation
/// results back into a calibrated master (parallel mode) or into a single
/// query table without ever materializing master tables (serial mode).
ConditionResult run_global_on_master(std::shared_ptr<const BeliefNetwork> net,
                                     ClusterTree master,
                                     const std::vector<VariableId>& K,
                                     const ConditionOptions& options);

/// Same, with the master tree built for K (cut, compile without K, union K
/// back in).
ConditionResult run_global(std::shared_ptr<const BeliefNetwork> net,
                           const std::vector<VariableId>& K,
                           const ConditionOptions& options);

/// Conditioning with the cutset-shaped master tree, so each instantiated
/// tree has the cut network's polytree shape. K must be a loop cutset.
ConditionResult loop_cutset_infer(std::shared_ptr<const BeliefNetwork> net,
                                  const std::vector<VariableId>& K,
                                  const ConditionOptions& options);

/// Greedy default: repeatedly take the variable whose outgoing-arc cut
/// removes the most remaining loops (ties to the lowest id).
std::vector<VariableId> default_cutset(const BeliefNetwork& net);

}  // namespace cbn
