#include "cbn/restructure.hpp"

#include <algorithm>
#include <queue>

namespace cbn {

namespace {

// Clusters on each side of an arc, or empty vectors if the arc is part of a
// cycle (it never is in a valid tree).
void split_sides(const ClusterTree& tree, int arc, std::vector<char>* side_a) {
  auto adj = tree.adjacency();
  side_a->assign(tree.cluster_count(), 0);
  std::vector<int> stack{tree.arcs[arc].first};
  (*side_a)[tree.arcs[arc].first] = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (auto [nb, a] : adj[u]) {
      if (a == arc || (*side_a)[nb]) continue;
      (*side_a)[nb] = 1;
      stack.push_back(nb);
    }
  }
}

bool adjacent(const ClusterTree& tree, int a, int b) {
  for (const auto& [x, y] : tree.arcs)
    if ((x == a && y == b) || (x == b && y == a)) return true;
  return false;
}

std::vector<int> path_between(const ClusterTree& tree, int from, int to) {
  auto adj = tree.adjacency();
  std::vector<int> prev_cluster(tree.cluster_count(), -1);
  std::vector<int> prev_arc(tree.cluster_count(), -1);
  std::queue<int> q;
  q.push(from);
  prev_cluster[from] = from;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    if (u == to) break;
    for (auto [nb, a] : adj[u]) {
      if (prev_cluster[nb] >= 0) continue;
      prev_cluster[nb] = u;
      prev_arc[nb] = a;
      q.push(nb);
    }
  }
  std::vector<int> arcs;
  if (prev_cluster[to] < 0) return arcs;
  for (int u = to; u != from; u = prev_cluster[u]) arcs.push_back(prev_arc[u]);
  std::reverse(arcs.begin(), arcs.end());
  return arcs;
}

int distance_between(const std::vector<std::pair<int, int>>& arcs, int n,
                     int from, int to) {
  std::vector<std::vector<int>> adj(n);
  for (const auto& [a, b] : arcs) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<int> dist(n, -1);
  std::queue<int> q;
  q.push(from);
  dist[from] = 0;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    if (u == to) return dist[u];
    for (int nb : adj[u])
      if (dist[nb] < 0) {
        dist[nb] = dist[u] + 1;
        q.push(nb);
      }
  }
  return -1;
}

}  // namespace

RestructureMove reverse_move(const RestructureMove& move) {
  RestructureMove r;
  r.arc = move.arc;
  r.old_a = move.new_a;
  r.old_b = move.new_b;
  r.new_a = move.old_a;
  r.new_b = move.old_b;
  return r;
}

std::vector<RestructureMove> flexible_moves(const ClusterTree& tree) {
  std::vector<RestructureMove> moves;
  for (std::size_t arc = 0; arc < tree.arcs.size(); ++arc) {
    std::vector<char> side_a;
    split_sides(tree, static_cast<int>(arc), &side_a);
    const auto& sep = tree.sepsets[arc];
    for (int a = 0; a < tree.cluster_count(); ++a) {
      if (!side_a[a]) continue;
      for (int b = 0; b < tree.cluster_count(); ++b) {
        if (side_a[b]) continue;
        if (a == tree.arcs[arc].first && b == tree.arcs[arc].second) continue;
        if (adjacent(tree, a, b)) continue;
        if (tree.intersection(a, b) != sep) continue;
        RestructureMove m;
        m.arc = static_cast<int>(arc);
        m.old_a = tree.arcs[arc].first;
        m.old_b = tree.arcs[arc].second;
        m.new_a = a;
        m.new_b = b;
        moves.push_back(m);
      }
    }
  }
  return moves;
}

void apply_move(EngineState& state, const RestructureMove& move) {
  const ClusterTree& tree = state.tree();
  if (move.arc < 0 || move.arc >= static_cast<int>(tree.arcs.size()))
    throw Error(ErrorCode::precondition, "no such arc");
  if (tree.arcs[move.arc] != std::make_pair(move.old_a, move.old_b))
    throw Error(ErrorCode::precondition,
                "move does not match the current arc endpoints");
  std::vector<char> side_a;
  split_sides(tree, move.arc, &side_a);
  if (!side_a[move.new_a] || side_a[move.new_b])
    throw Error(ErrorCode::precondition,
                "new endpoints must lie on opposite sides of the arc");
  bool same = move.new_a == move.old_a && move.new_b == move.old_b;
  if (!same && adjacent(tree, move.new_a, move.new_b))
    throw Error(ErrorCode::precondition, "new endpoints already adjacent");
  if (tree.intersection(move.new_a, move.new_b) != tree.sepsets[move.arc])
    throw Error(ErrorCode::precondition,
                "new endpoints do not share the arc's separator");

  // The stale set for factored form: arcs on the current path between the
  // new endpoints, except the replaced arc itself, whose message transfers.
  std::vector<int> old_path = path_between(tree, move.new_a, move.new_b);
  state.replace_arc(move.arc, move.new_a, move.new_b);
  if (state.form() == Form::factored) {
    for (int a : old_path)
      if (a != move.arc) state.mark_arc_stale(a);
  }
}

int cover_query(EngineState& state, const std::vector<VariableId>& J) {
  std::vector<VariableId> sorted(J.begin(), J.end());
  std::sort(sorted.begin(), sorted.end());
  int target = state.tree().smallest_cluster_containing(sorted, state.network());
  int source = state.last_changed();
  if (target < 0 || source < 0 || target == source) return 0;
  int applied = 0;
  for (;;) {
    int n = state.tree().cluster_count();
    int current =
        distance_between(state.tree().arcs, n, source, target);
    if (current <= 1) break;
    RestructureMove best;
    int best_dist = current;
    for (const RestructureMove& m : flexible_moves(state.tree())) {
      auto arcs = state.tree().arcs;
      arcs[m.arc] = {m.new_a, m.new_b};
      int d = distance_between(arcs, n, source, target);
      if (d >= 0 && d < best_dist) {
        best_dist = d;
        best = m;
      }
    }
    if (best.arc < 0) break;
    apply_move(state, best);
    ++applied;
  }
  return applied;
}

}  // namespace cbn
