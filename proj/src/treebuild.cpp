#include "cbn/treebuild.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

namespace cbn {

namespace {

std::vector<VariableId> sorted_intersection(const std::vector<VariableId>& a,
                                            const std::vector<VariableId>& b) {
  std::vector<VariableId> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

std::vector<VariableId> sorted_union(std::vector<VariableId> a,
                                     const std::vector<VariableId>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

std::string member_names(const std::vector<VariableId>& vars) {
  std::ostringstream os;
  os << "{";
  for (std::size_t i = 0; i < vars.size(); ++i)
    os << (i ? "," : "") << vars[i];
  os << "}";
  return os.str();
}

// Union-find over cluster indices.
struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

}  // namespace

bool Cluster::contains(VariableId v) const {
  return std::binary_search(members.begin(), members.end(), v);
}

bool Cluster::contains_all(const std::vector<VariableId>& vars) const {
  for (VariableId v : vars)
    if (!contains(v)) return false;
  return true;
}

std::vector<std::vector<std::pair<int, int>>> ClusterTree::adjacency() const {
  std::vector<std::vector<std::pair<int, int>>> adj(clusters.size());
  for (std::size_t a = 0; a < arcs.size(); ++a) {
    adj[arcs[a].first].emplace_back(arcs[a].second, static_cast<int>(a));
    adj[arcs[a].second].emplace_back(arcs[a].first, static_cast<int>(a));
  }
  return adj;
}

double ClusterTree::cluster_weight(int i, const BeliefNetwork& net) const {
  double w = 1.0;
  for (VariableId v : clusters[i].members) w *= net.card(v);
  return w;
}

int ClusterTree::smallest_cluster_containing(
    const std::vector<VariableId>& vars, const BeliefNetwork& net) const {
  int best = -1;
  double best_weight = 0.0;
  for (int i = 0; i < cluster_count(); ++i) {
    if (!clusters[i].contains_all(vars)) continue;
    double w = cluster_weight(i, net);
    if (best < 0 || w < best_weight) {
      best = i;
      best_weight = w;
    }
  }
  return best;
}

std::size_t ClusterTree::total_cells(const BeliefNetwork& net) const {
  std::size_t total = 0;
  for (int i = 0; i < cluster_count(); ++i)
    total += static_cast<std::size_t>(cluster_weight(i, net));
  return total;
}

int ClusterTree::max_cluster_size() const {
  int m = 0;
  for (const Cluster& c : clusters)
    m = std::max(m, static_cast<int>(c.members.size()));
  return m;
}

std::vector<VariableId> ClusterTree::intersection(int i, int j) const {
  return sorted_intersection(clusters[i].members, clusters[j].members);
}

bool is_chordal(const UndirectedGraph& g) {
  // Maximum-cardinality search; the reverse visit order is a perfect
  // elimination order iff the graph is chordal.
  std::vector<int> nodes = g.active_nodes();
  int n = static_cast<int>(nodes.size());
  std::vector<int> weight(g.node_count(), 0);
  std::vector<char> visited(g.node_count(), 0);
  std::vector<int> visit_rank(g.node_count(), -1);
  std::vector<int> order;
  order.reserve(n);
  for (int step = 0; step < n; ++step) {
    int best = -1;
    for (int v : nodes)
      if (!visited[v] && (best < 0 || weight[v] > weight[best])) best = v;
    visited[best] = 1;
    visit_rank[best] = step;
    order.push_back(best);
    for (int u : g.neighbors(best))
      if (!visited[u]) ++weight[u];
  }
  // Check: for each vertex, its earlier-visited neighbors minus the latest
  // one must all neighbor that latest one.
  for (int v : order) {
    int latest = -1;
    for (int u : g.neighbors(v))
      if (visit_rank[u] < visit_rank[v] &&
          (latest < 0 || visit_rank[u] > visit_rank[latest]))
        latest = u;
    if (latest < 0) continue;
    for (int u : g.neighbors(v)) {
      if (u == latest || visit_rank[u] >= visit_rank[v]) continue;
      if (!g.has_edge(u, latest)) return false;
    }
  }
  return true;
}

std::pair<UndirectedGraph, EliminationOrder> triangulate(
    const UndirectedGraph& g, const std::vector<int>& card) {
  UndirectedGraph filled = g;
  UndirectedGraph work = g;
  EliminationOrder order;
  std::vector<int> nodes = work.active_nodes();
  while (!nodes.empty()) {
    int best = -1;
    long best_fill = 0;
    double best_weight = 0.0;
    for (int v : nodes) {
      long fill = 0;
      const auto& nb = work.neighbors(v);
      for (auto it = nb.begin(); it != nb.end(); ++it)
        for (auto jt = std::next(it); jt != nb.end(); ++jt)
          if (!work.has_edge(*it, *jt)) ++fill;
      double weight = card[v];
      for (int u : nb) weight *= card[u];
      if (best < 0 || fill < best_fill ||
          (fill == best_fill && weight < best_weight)) {
        best = v;
        best_fill = fill;
        best_weight = weight;
      }
      // Equal fill and weight: keep the lower id (nodes are scanned
      // ascending, so the first winner stands).
    }
    const auto nb = work.neighbors(best);
    for (auto it = nb.begin(); it != nb.end(); ++it)
      for (auto jt = std::next(it); jt != nb.end(); ++jt)
        if (!work.has_edge(*it, *jt)) {
          work.add_edge(*it, *jt);
          filled.add_edge(*it, *jt);
        }
    work.drop_node(best);
    order.push_back(best);
    nodes.erase(std::find(nodes.begin(), nodes.end(), best));
  }
  return {std::move(filled), std::move(order)};
}

std::vector<Cluster> max_cliques(const UndirectedGraph& g,
                                 const EliminationOrder& order) {
  std::vector<int> rank(g.node_count(), -1);
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = static_cast<int>(i);
  for (int v : g.active_nodes())
    if (rank[v] < 0)
      throw Error(ErrorCode::precondition,
                  "elimination order does not cover the graph");
  // Candidate clique per vertex: itself plus later neighbors. Validity of the
  // order doubles as the chordality check.
  std::vector<Cluster> candidates;
  for (int v : order) {
    std::vector<VariableId> members{v};
    for (int u : g.neighbors(v))
      if (rank[u] > rank[v]) members.push_back(u);
    std::sort(members.begin(), members.end());
    // Later neighbors must be mutually adjacent, else the order is not
    // a perfect elimination order (graph not chordal).
    for (std::size_t i = 0; i < members.size(); ++i)
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        if (members[i] == v || members[j] == v) continue;
        if (!g.has_edge(members[i], members[j]))
          throw Error(ErrorCode::precondition,
                      "graph is not chordal under the given order");
      }
    candidates.push_back(Cluster{std::move(members)});
  }
  std::vector<Cluster> cliques;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    bool maximal = true;
    for (std::size_t j = 0; j < candidates.size() && maximal; ++j) {
      if (i == j) continue;
      if (candidates[j].members.size() < candidates[i].members.size()) continue;
      if (candidates[j].members.size() == candidates[i].members.size() && j > i)
        continue;  // identical sets: keep the first
      if (std::includes(candidates[j].members.begin(),
                        candidates[j].members.end(),
                        candidates[i].members.begin(),
                        candidates[i].members.end()))
        maximal = false;
    }
    if (maximal) cliques.push_back(candidates[i]);
  }
  return cliques;
}

ClusterTree build_join_tree(std::vector<Cluster> clusters,
                            const BeliefNetwork& net) {
  ClusterTree tree;
  tree.clusters = std::move(clusters);
  tree.cpt_owner.assign(net.size(), -1);
  tree.finding_owner.assign(net.evidence.size(), -1);
  int n = tree.cluster_count();

  struct Candidate {
    int weight;       // |intersection|
    double combined;  // sum of cluster weights, for ties
    int i, j;
  };
  std::vector<Candidate> candidates;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      int w = static_cast<int>(tree.intersection(i, j).size());
      if (w == 0) continue;
      candidates.push_back(
          {w, tree.cluster_weight(i, net) + tree.cluster_weight(j, net), i, j});
    }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.weight != b.weight) return a.weight > b.weight;
              if (a.combined != b.combined) return a.combined < b.combined;
              if (a.i != b.i) return a.i < b.i;
              return a.j < b.j;
            });
  DisjointSets ds(n);
  for (const Candidate& c : candidates) {
    if (!ds.unite(c.i, c.j)) continue;
    tree.arcs.emplace_back(c.i, c.j);
    tree.sepsets.push_back(tree.intersection(c.i, c.j));
  }
  return tree;
}

ValidationReport verify_cluster_tree(const BeliefNetwork& net,
                                     const ClusterTree& tree) {
  ValidationReport report;
  auto add = [&](ViolationKind k, std::string detail) {
    report.violations.push_back({k, std::move(detail)});
  };
  int n = tree.cluster_count();
  for (int i = 0; i < n; ++i)
    if (tree.clusters[i].members.empty())
      add(ViolationKind::bad_sepset, "cluster " + std::to_string(i) + " empty");

  // (a) forest
  {
    DisjointSets ds(n);
    for (const auto& [a, b] : tree.arcs)
      if (a < 0 || a >= n || b < 0 || b >= n || !ds.unite(a, b)) {
        add(ViolationKind::not_a_forest, "arcs contain a cycle or bad index");
        break;
      }
  }
  // sepsets must match intersections
  if (tree.sepsets.size() != tree.arcs.size()) {
    add(ViolationKind::bad_sepset, "sepset list does not match arc list");
  } else {
    for (std::size_t a = 0; a < tree.arcs.size(); ++a) {
      auto expect = tree.intersection(tree.arcs[a].first, tree.arcs[a].second);
      if (tree.sepsets[a] != expect)
        add(ViolationKind::bad_sepset,
            "separator on arc " + std::to_string(a) +
                " is not the cluster intersection");
    }
  }
  // (b) join property: clusters containing any v induce a connected subgraph.
  {
    auto adj = tree.adjacency();
    std::set<VariableId> vars;
    for (const Cluster& c : tree.clusters)
      vars.insert(c.members.begin(), c.members.end());
    for (VariableId v : vars) {
      std::vector<int> holders;
      for (int i = 0; i < n; ++i)
        if (tree.clusters[i].contains(v)) holders.push_back(i);
      if (holders.size() <= 1) continue;
      std::set<int> seen{holders.front()};
      std::queue<int> q;
      q.push(holders.front());
      while (!q.empty()) {
        int c = q.front();
        q.pop();
        for (auto [nb, arc] : adj[c]) {
          if (!tree.clusters[nb].contains(v) || seen.count(nb)) continue;
          if (!tree.clusters[c].contains(v)) continue;
          seen.insert(nb);
          q.push(nb);
        }
      }
      for (int h : holders)
        if (!seen.count(h)) {
          add(ViolationKind::join_property,
              "variable " + std::to_string(v) +
                  " appears in disconnected clusters");
          break;
        }
    }
  }
  // (c) family coverage
  for (const Cpt& cpt : net.cpts) {
    std::vector<VariableId> family = cpt.parents;
    family.push_back(cpt.child);
    std::sort(family.begin(), family.end());
    bool covered = false;
    for (const Cluster& c : tree.clusters)
      if (c.contains_all(family)) covered = true;
    if (!covered)
      add(ViolationKind::family_uncovered,
          "family " + member_names(family) + " fits in no cluster");
  }
  // (d),(e) assignments
  if (static_cast<int>(tree.cpt_owner.size()) != net.size()) {
    add(ViolationKind::bad_assignment, "owner list has wrong length");
  } else {
    for (int v = 0; v < net.size(); ++v) {
      int owner = tree.cpt_owner[v];
      if (owner < 0 || owner >= n) {
        add(ViolationKind::bad_assignment,
            "distribution of variable " + std::to_string(v) + " unassigned");
        continue;
      }
      std::vector<VariableId> family = net.cpts[v].parents;
      family.push_back(v);
      std::sort(family.begin(), family.end());
      if (!tree.clusters[owner].contains_all(family))
        add(ViolationKind::bad_assignment,
            "distribution of variable " + std::to_string(v) +
                " assigned to a non-covering cluster");
    }
  }
  if (tree.finding_owner.size() != net.evidence.size()) {
    add(ViolationKind::bad_assignment, "finding owner list has wrong length");
  } else {
    for (std::size_t k = 0; k < net.evidence.size(); ++k) {
      int owner = tree.finding_owner[k];
      if (owner < 0 || owner >= n) {
        add(ViolationKind::bad_assignment,
            "finding " + std::to_string(k) + " unassigned");
        continue;
      }
      if (!tree.clusters[owner].contains_all(net.evidence[k].scope_vars))
        add(ViolationKind::bad_assignment,
            "finding " + std::to_string(k) +
                " assigned to a non-covering cluster");
    }
  }
  return report;
}

ClusterTree assign_potentials(const BeliefNetwork& net, ClusterTree tree) {
  tree.cpt_owner.assign(net.size(), -1);
  tree.finding_owner.assign(net.evidence.size(), -1);
  for (int v = 0; v < net.size(); ++v) {
    std::vector<VariableId> family = net.cpts[v].parents;
    family.push_back(v);
    std::sort(family.begin(), family.end());
    int owner = tree.smallest_cluster_containing(family, net);
    if (owner < 0)
      throw Error(ErrorCode::internal,
                  "family " + member_names(family) + " fits in no cluster");
    tree.cpt_owner[v] = owner;
  }
  for (std::size_t k = 0; k < net.evidence.size(); ++k) {
    int owner =
        tree.smallest_cluster_containing(net.evidence[k].scope_vars, net);
    if (owner < 0)
      throw Error(ErrorCode::uncoverable_query,
                  "finding over " + member_names(net.evidence[k].scope_vars) +
                      " fits in no cluster of the compiled tree");
    tree.finding_owner[k] = owner;
  }
  return tree;
}

ClusterTree compile_network(const BeliefNetwork& net) {
  UndirectedGraph moral = moral_graph(net);
  std::vector<int> card(net.size());
  for (int v = 0; v < net.size(); ++v) card[v] = net.card(v);
  auto [filled, order] = triangulate(moral, card);
  ClusterTree tree = build_join_tree(max_cliques(filled, order), net);
  return assign_potentials(net, tree);
}

ClusterTree polytree_cluster_tree(const BeliefNetwork& net) {
  if (!is_singly_connected(net))
    throw Error(ErrorCode::precondition,
                "network is multiply connected; polytree construction "
                "requires a singly connected network");
  std::vector<Cluster> clusters(net.size());
  for (int v = 0; v < net.size(); ++v) {
    std::vector<VariableId> family = net.cpts[v].parents;
    family.push_back(v);
    std::sort(family.begin(), family.end());
    clusters[v].members = std::move(family);
  }
  ClusterTree tree;
  tree.clusters = std::move(clusters);
  for (int v = 0; v < net.size(); ++v)
    for (VariableId p : net.cpts[v].parents) {
      tree.arcs.emplace_back(std::min<int>(p, v), std::max<int>(p, v));
      tree.sepsets.push_back(tree.intersection(p, v));
    }
  return assign_potentials(net, tree);
}

namespace {

// Chain the representatives of distinct arc-components so every cluster pair
// is path-connected; callers ensure the shared variables (K) appear in every
// cluster, which keeps the join property.
void connect_components(ClusterTree& tree) {
  DisjointSets ds(tree.cluster_count());
  for (const auto& [a, b] : tree.arcs) ds.unite(a, b);
  std::vector<int> reps;
  std::set<int> seen;
  for (int i = 0; i < tree.cluster_count(); ++i) {
    int r = ds.find(i);
    if (!seen.count(r)) {
      seen.insert(r);
      reps.push_back(i);
    }
  }
  for (std::size_t i = 1; i < reps.size(); ++i) {
    tree.arcs.emplace_back(reps[i - 1], reps[i]);
    tree.sepsets.push_back(tree.intersection(reps[i - 1], reps[i]));
  }
}

}  // namespace

ClusterTree cutset_cluster_tree(const BeliefNetwork& net,
                                const std::vector<VariableId>& K) {
  if (!verify_cutset(net, K))
    throw Error(ErrorCode::invalid_cutset,
                "conditioning set does not cut every loop");
  BeliefNetwork cut = cut_outgoing_arcs(net, K);
  std::vector<VariableId> ksorted(K.begin(), K.end());
  std::sort(ksorted.begin(), ksorted.end());
  ksorted.erase(std::unique(ksorted.begin(), ksorted.end()), ksorted.end());
  ClusterTree tree;
  tree.clusters.resize(net.size());
  for (int v = 0; v < net.size(); ++v) {
    std::vector<VariableId> members = cut.cpts[v].parents;
    members.push_back(v);
    tree.clusters[v].members = sorted_union(std::move(members), ksorted);
  }
  for (int v = 0; v < net.size(); ++v)
    for (VariableId p : cut.cpts[v].parents) {
      tree.arcs.emplace_back(std::min<int>(p, v), std::max<int>(p, v));
      tree.sepsets.push_back(tree.intersection(p, v));
    }
  if (!ksorted.empty()) connect_components(tree);
  return assign_potentials(net, tree);
}

ClusterTree conditioned_cluster_tree(ClusterTree tree,
                                     const std::vector<VariableId>& K,
                                     const BeliefNetwork& net) {
  std::vector<VariableId> ksorted(K.begin(), K.end());
  std::sort(ksorted.begin(), ksorted.end());
  ksorted.erase(std::unique(ksorted.begin(), ksorted.end()), ksorted.end());
  if (ksorted.empty()) return tree;
  for (Cluster& c : tree.clusters)
    c.members = sorted_union(std::move(c.members), ksorted);
  for (std::size_t a = 0; a < tree.arcs.size(); ++a)
    tree.sepsets[a] = tree.intersection(tree.arcs[a].first, tree.arcs[a].second);
  connect_components(tree);
  return assign_potentials(net, tree);
}

bool verify_cutset(const BeliefNetwork& net,
                   const std::vector<VariableId>& K) {
  for (VariableId v : K)
    if (v < 0 || v >= net.size()) return false;
  return is_singly_connected(cut_outgoing_arcs(net, K));
}

ClusterTree global_master_tree(const BeliefNetwork& net,
                               const std::vector<VariableId>& K) {
  std::vector<VariableId> ksorted(K.begin(), K.end());
  std::sort(ksorted.begin(), ksorted.end());
  ksorted.erase(std::unique(ksorted.begin(), ksorted.end()), ksorted.end());
  if (ksorted.empty()) return compile_network(net);

  BeliefNetwork cut = cut_outgoing_arcs(net, ksorted);
  UndirectedGraph reduced = moral_graph(cut);
  for (VariableId k : ksorted) reduced.drop_node(k);
  std::vector<int> card(net.size());
  for (int v = 0; v < net.size(); ++v) card[v] = net.card(v);
  auto [filled, order] = triangulate(reduced, card);
  std::vector<Cluster> cliques = max_cliques(filled, order);
  if (cliques.empty()) cliques.push_back(Cluster{ksorted});
  ClusterTree tree = build_join_tree(std::move(cliques), net);
  tree.cpt_owner.clear();
  tree.finding_owner.clear();
  return conditioned_cluster_tree(std::move(tree), ksorted, net);
}

}  // namespace cbn
