#pragma once

#include <vector>

#include "cbn/propagate.hpp"

namespace cbn {

/// Replacement of arc `arc` (endpoints old_a, old_b) by a new arc between the
/// nonadjacent clusters (new_a, new_b), legal when their intersection equals
/// the arc's separator and the arc lies on the path between them. new_a is on
/// old_a's side. The swap is reversible and the arc's tables stay valid.
struct RestructureMove {
  int arc = -1;
  int old_a = -1, old_b = -1;
  int new_a = -1, new_b = -1;
};

RestructureMove reverse_move(const RestructureMove& move);

/// All legal replacements on the tree, scanning arcs in index order and
/// endpoint pairs in ascending cluster order.
std::vector<RestructureMove> flexible_moves(const ClusterTree& tree);

/// Apply a legal move to a live state. Joint form keeps every stored message
/// valid; factored form flags the messages along the old path between the
/// new endpoints for recomputation.
void apply_move(EngineState& state, const RestructureMove& move);

/// Greedily apply moves that shorten the path between the cluster covering J
/// and the most recently changed cluster. Returns the number of moves
/// applied (possibly zero).
int cover_query(EngineState& state, const std::vector<VariableId>& J);

}  // namespace cbn
