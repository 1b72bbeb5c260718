#include "cbn/condition.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <thread>

namespace cbn {

namespace {

// Connected components of the clusters under the arcs accepted by `use_arc`.
std::vector<Island> component_partition(
    const ClusterTree& tree, const std::function<bool(std::size_t)>& use_arc,
    std::vector<int>* rejected_arcs) {
  int n = tree.cluster_count();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t a = 0; a < tree.arcs.size(); ++a) {
    if (!use_arc(a)) {
      if (rejected_arcs) rejected_arcs->push_back(static_cast<int>(a));
      continue;
    }
    parent[find(tree.arcs[a].first)] = find(tree.arcs[a].second);
  }
  std::vector<int> root_to_island(n, -1);
  std::vector<Island> islands;
  for (int i = 0; i < n; ++i) {
    int r = find(i);
    if (root_to_island[r] < 0) {
      root_to_island[r] = static_cast<int>(islands.size());
      islands.push_back(Island{});
    }
    islands[root_to_island[r]].clusters.push_back(i);
  }
  return islands;
}

// Propagate (arcs must already be gated to match the partition), fill island
// scalars, and return per-island cross factors.
std::vector<double> score_partition(EngineState& state,
                                    std::vector<Island>& islands) {
  state.propagate();
  for (Island& island : islands) {
    int best = island.clusters.front();
    for (int c : island.clusters)
      if (state.cluster_scope(c).cells() < state.cluster_scope(best).cells())
        best = c;
    island.scalar = sum_all(state.posterior(best));
  }
  // Product of every other island's scalar, composed without division so
  // zero scalars stay exact.
  std::size_t m = islands.size();
  std::vector<double> prefix(m + 1, 1.0), suffix(m + 1, 1.0);
  for (std::size_t i = 0; i < m; ++i)
    prefix[i + 1] = prefix[i] * islands[i].scalar;
  for (std::size_t i = m; i-- > 0;)
    suffix[i] = suffix[i + 1] * islands[i].scalar;
  std::vector<double> factors(m);
  for (std::size_t i = 0; i < m; ++i) factors[i] = prefix[i] * suffix[i + 1];
  return factors;
}

Assignment restrict_to(const Assignment& x,
                       const std::vector<VariableId>& sorted_members) {
  Assignment out;
  for (const auto& [v, s] : x)
    if (std::binary_search(sorted_members.begin(), sorted_members.end(), v))
      out.emplace_back(v, s);
  return out;
}

// Master tree structure with the conditioning variables removed; owners are
// kept so initialization can slice the input distributions into place.
ClusterTree strip_conditioned_vars(ClusterTree tree,
                                   const std::vector<VariableId>& K) {
  std::vector<VariableId> kvars(K.begin(), K.end());
  std::sort(kvars.begin(), kvars.end());
  auto strip = [&](std::vector<VariableId>& vars) {
    std::vector<VariableId> kept;
    for (VariableId v : vars)
      if (!std::binary_search(kvars.begin(), kvars.end(), v))
        kept.push_back(v);
    vars = std::move(kept);
  };
  for (Cluster& c : tree.clusters) strip(c.members);
  for (auto& sep : tree.sepsets) strip(sep);
  return tree;
}

// Propagation outcome for one instantiated tree.
struct Scored {
  std::vector<Island> islands;
  std::vector<double> factors;
  std::vector<int> island_of;
  double total = 1.0;  // product of all island scalars = Pr{x_K, e}
  bool skipped = false;
};

Scored propagate_instantiated(EngineState& st, const ConditionOptions& options) {
  Scored out;
  if (options.use_islands) {
    out.islands = find_islands(st.tree());
    out.factors = island_propagate(st, out.islands);
  } else {
    // Keep every arc: empty separators then carry scalar messages. Distinct
    // components still need their cross factors, exactly like islands.
    st.enable_all_arcs();
    out.islands = component_partition(
        st.tree(), [](std::size_t) { return true; }, nullptr);
    out.factors = score_partition(st, out.islands);
  }
  out.island_of.assign(st.tree().cluster_count(), 0);
  for (std::size_t i = 0; i < out.islands.size(); ++i)
    for (int c : out.islands[i].clusters)
      out.island_of[c] = static_cast<int>(i);
  out.total = 1.0;
  for (const Island& island : out.islands) out.total *= island.scalar;
  if (options.use_islands && options.skip_zero_islands &&
      zero_island_skip(out.islands))
    out.skipped = true;
  return out;
}

// Per-worker accumulation target for the parallel (master) mode.
struct MasterAccumulator {
  std::vector<Table> post;
  std::vector<Table> sep;
  double p_evidence = 0.0;

  MasterAccumulator(const BeliefNetwork& net, const ClusterTree& master) {
    for (int i = 0; i < master.cluster_count(); ++i)
      post.emplace_back(net.scope_of(master.clusters[i].members), 0.0);
    for (std::size_t a = 0; a < master.arcs.size(); ++a)
      sep.emplace_back(net.scope_of(master.sepsets[a]), 0.0);
  }

  void merge(const MasterAccumulator& other) {
    for (std::size_t i = 0; i < post.size(); ++i)
      post[i].add_scaled_at(other.post[i], {}, 1.0);
    for (std::size_t a = 0; a < sep.size(); ++a)
      sep[a].add_scaled_at(other.sep[a], {}, 1.0);
    p_evidence += other.p_evidence;
  }
};

void process_master_instantiation(const EngineState& master_state,
                                  const ClusterTree& master,
                                  const Assignment& x,
                                  const ConditionOptions& options,
                                  MasterAccumulator& acc,
                                  InstantiationInfo& info) {
  EngineState st = instantiate_tree(master_state, x);
  info.x = x;
  Scored scored = propagate_instantiated(st, options);
  info.island_count = static_cast<int>(scored.islands.size());
  if (scored.skipped) {
    info.skipped = true;
    return;
  }
  for (int i = 0; i < st.tree().cluster_count(); ++i) {
    acc.post[i].add_scaled_at(st.posterior(i),
                              restrict_to(x, master.clusters[i].members),
                              scored.factors[scored.island_of[i]]);
  }
  for (std::size_t a = 0; a < st.tree().arcs.size(); ++a) {
    Assignment fixed = restrict_to(x, master.sepsets[a]);
    if (st.tree().sepsets[a].empty()) {
      // Separator swallowed by the conditioning set: its posterior at this
      // coordinate is the whole instantiation's mass.
      acc.sep[a].add_scaled_at(Table::scalar(scored.total), fixed, 1.0);
    } else {
      int i = st.tree().arcs[a].first;
      int j = st.tree().arcs[a].second;
      acc.sep[a].add_scaled_at(st.sepset_posterior(i, j), fixed,
                               scored.factors[scored.island_of[i]]);
    }
  }
  acc.p_evidence += scored.total;
}

}  // namespace

std::vector<Island> find_islands(const ClusterTree& instantiated,
                                 std::vector<int>* island_arcs) {
  return component_partition(
      instantiated,
      [&](std::size_t a) { return !instantiated.sepsets[a].empty(); },
      island_arcs);
}

std::vector<double> island_propagate(EngineState& state,
                                     std::vector<Island>& islands) {
  const ClusterTree& tree = state.tree();
  for (std::size_t a = 0; a < tree.arcs.size(); ++a)
    state.set_arc_enabled(static_cast<int>(a), !tree.sepsets[a].empty());
  return score_partition(state, islands);
}

bool zero_island_skip(const std::vector<Island>& islands) {
  for (const Island& island : islands)
    if (island.scalar == 0.0) return true;
  return false;
}

std::vector<Assignment> enumerate_instantiations(
    const BeliefNetwork& net, const std::vector<VariableId>& K) {
  std::vector<VariableId> vars(K.begin(), K.end());
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  std::vector<Assignment> out;
  std::vector<int> state(vars.size(), 0);
  for (;;) {
    Assignment a;
    for (std::size_t i = 0; i < vars.size(); ++i)
      a.emplace_back(vars[i], state[i]);
    out.push_back(std::move(a));
    int d = static_cast<int>(vars.size()) - 1;
    while (d >= 0 && ++state[d] == net.card(vars[d])) state[d--] = 0;
    if (d < 0) break;
  }
  return out;
}

ConditionResult run_global_on_master(std::shared_ptr<const BeliefNetwork> net,
                                     ClusterTree master,
                                     const std::vector<VariableId>& K,
                                     const ConditionOptions& options) {
  ConditionResult result;
  std::vector<Assignment> cases = enumerate_instantiations(*net, K);
  result.instantiations = static_cast<long>(cases.size());
  result.details.resize(cases.size());

  if (options.mode == ConditionMode::serial) {
    if (options.query.empty())
      throw Error(ErrorCode::usage, "serial conditioning needs a query");
    std::vector<VariableId> J(options.query.begin(), options.query.end());
    std::sort(J.begin(), J.end());
    J.erase(std::unique(J.begin(), J.end()), J.end());
    std::vector<VariableId> j_free;
    for (VariableId v : J)
      if (std::find(K.begin(), K.end(), v) == K.end()) j_free.push_back(v);

    // Never materialize master tables: every instantiation initializes its
    // (small) tables straight from the sliced input distributions, and only
    // the query accumulator persists across instantiations.
    ClusterTree stripped = strip_conditioned_vars(master, K);
    int query_cluster = stripped.smallest_cluster_containing(j_free, *net);
    if (query_cluster < 0)
      throw Error(ErrorCode::uncoverable_query,
                  "query fits in no instantiated cluster");

    std::size_t baseline = Table::live_bytes();
    Table::reset_peak();
    Table acc(net->scope_of(J), 0.0);
    double p_evidence = 0.0;
    for (std::size_t t = 0; t < cases.size(); ++t) {
      const Assignment& x = cases[t];
      InstantiationInfo& info = result.details[t];
      info.x = x;
      EngineState st(net, stripped, options.form, x);
      Scored scored = propagate_instantiated(st, options);
      info.island_count = static_cast<int>(scored.islands.size());
      if (scored.skipped) {
        info.skipped = true;
        ++result.skipped;
        continue;
      }
      Table part = marginalize(st.posterior(query_cluster), j_free);
      acc.add_scaled_at(part, restrict_to(x, J),
                        scored.factors[scored.island_of[query_cluster]]);
      p_evidence += scored.total;
    }
    result.peak_table_bytes = Table::peak_bytes() - baseline;
    result.query_joint = std::move(acc);
    result.p_evidence = p_evidence;
    return result;
  }

  // Parallel (master) mode: initialize master tables once, fan instantiations
  // out over workers with per-worker accumulators, reduce in worker order.
  EngineState master_state(net, master, options.form);
  int workers = std::max(1, options.workers);
  if (static_cast<std::size_t>(workers) > cases.size())
    workers = static_cast<int>(cases.size());
  std::vector<MasterAccumulator> partials(static_cast<std::size_t>(workers),
                                          MasterAccumulator(*net, master));
  auto body = [&](int w) {
    for (std::size_t t = static_cast<std::size_t>(w); t < cases.size();
         t += static_cast<std::size_t>(workers)) {
      process_master_instantiation(master_state, master, cases[t], options,
                                   partials[static_cast<std::size_t>(w)],
                                   result.details[t]);
    }
  };
  if (workers <= 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(body, w);
    for (std::thread& th : pool) th.join();
  }
  for (int w = 1; w < workers; ++w) partials[0].merge(partials[w]);
  for (const InstantiationInfo& info : result.details)
    if (info.skipped) ++result.skipped;

  EngineState calibrated =
      make_calibrated_state(net, std::move(master), std::move(partials[0].post),
                            std::move(partials[0].sep));
  result.master_table_bytes = calibrated.table_bytes();
  result.p_evidence = partials[0].p_evidence;
  result.master = std::move(calibrated);
  return result;
}

ConditionResult run_global(std::shared_ptr<const BeliefNetwork> net,
                           const std::vector<VariableId>& K,
                           const ConditionOptions& options) {
  return run_global_on_master(net, global_master_tree(*net, K), K, options);
}

ConditionResult loop_cutset_infer(std::shared_ptr<const BeliefNetwork> net,
                                  const std::vector<VariableId>& K,
                                  const ConditionOptions& options) {
  if (!verify_cutset(*net, K))
    throw Error(ErrorCode::invalid_cutset,
                "conditioning set does not cut every loop");
  return run_global_on_master(net, cutset_cluster_tree(*net, K), K, options);
}

std::vector<VariableId> default_cutset(const BeliefNetwork& net) {
  auto loop_count = [](const BeliefNetwork& n) {
    std::vector<int> parent(n.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    long edges = 0;
    for (const Cpt& cpt : n.cpts) {
      edges += static_cast<long>(cpt.parents.size());
      for (VariableId p : cpt.parents) {
        int a = find(p), b = find(cpt.child);
        if (a != b) parent[a] = b;
      }
    }
    long components = 0;
    std::vector<char> seen(n.size(), 0);
    for (int v = 0; v < n.size(); ++v)
      if (!seen[find(v)]) {
        seen[find(v)] = 1;
        ++components;
      }
    return edges - n.size() + components;
  };

  std::vector<VariableId> K;
  BeliefNetwork current = net;
  long loops = loop_count(current);
  while (loops > 0) {
    int best = -1;
    long best_after = loops;
    for (int v = 0; v < net.size(); ++v) {
      if (std::find(K.begin(), K.end(), v) != K.end()) continue;
      long after = loop_count(cut_outgoing_arcs(current, {v}));
      if (after < best_after) {
        best_after = after;
        best = v;
      }
    }
    if (best < 0)
      throw Error(ErrorCode::internal, "no variable cuts a remaining loop");
    K.push_back(best);
    current = cut_outgoing_arcs(current, {best});
    loops = best_after;
  }
  std::sort(K.begin(), K.end());
  return K;
}

}  // namespace cbn
