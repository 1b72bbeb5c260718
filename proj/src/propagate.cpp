#include "cbn/propagate.hpp"

#include <algorithm>
#include <queue>
#include <random>

namespace cbn {

EngineState::EngineState(std::shared_ptr<const BeliefNetwork> net,
                         ClusterTree tree, Form form, Assignment conditioning,
                         unsigned schedule_seed)
    : net_(std::move(net)),
      tree_(std::move(tree)),
      form_(form),
      conditioning_(std::move(conditioning)),
      schedule_seed_(schedule_seed) {
  int n = tree_.cluster_count();
  psi_.resize(n);
  post_.resize(n);
  post_fresh_.assign(n, 0);
  msg_.resize(tree_.arcs.size());
  sep_old_.resize(tree_.arcs.size());
  fresh_.assign(tree_.arcs.size(), {0, 0});
  arc_enabled_.assign(tree_.arcs.size(), 1);
  changed_.assign(n, 0);
  rebuild_adjacency();
  initialize();
}

Scope EngineState::cluster_scope(int i) const {
  return net_->scope_of(tree_.clusters[i].members);
}

Scope EngineState::sepset_scope(int arc) const {
  return net_->scope_of(tree_.sepsets[arc]);
}

Table EngineState::sliced_factor(const Table& t) const {
  return conditioning_.empty() ? t : slice(t, conditioning_);
}

void EngineState::rebuild_adjacency() {
  adj_ = tree_.adjacency();
  if (schedule_seed_ != 0) {
    std::mt19937 rng(schedule_seed_);
    for (auto& lst : adj_) std::shuffle(lst.begin(), lst.end(), rng);
  }
}

void EngineState::initialize() {
  int n = tree_.cluster_count();
  for (int i = 0; i < n; ++i) {
    psi_[i] = Table::scalar(1.0);
    changed_[i] = 0;
  }
  for (int v = 0; v < net_->size(); ++v) {
    int owner = v < static_cast<int>(tree_.cpt_owner.size())
                    ? tree_.cpt_owner[v]
                    : -1;
    if (owner < 0)
      throw Error(ErrorCode::internal, "unassigned distribution");
    psi_[owner] = multiply(psi_[owner], sliced_factor(net_->cpts[v].table));
    changed_[owner] = 1;
  }
  for (std::size_t k = 0; k < net_->evidence.size(); ++k) {
    int owner = tree_.finding_owner[k];
    if (owner < 0)
      throw Error(ErrorCode::uncoverable_query, "unassigned finding");
    psi_[owner] = multiply(psi_[owner], sliced_factor(net_->evidence[k].table));
    changed_[owner] = 1;
  }
  for (const Entered& e : entered_) {
    if (!e.active) continue;
    psi_[e.owner] = multiply(psi_[e.owner], sliced_factor(e.finding.table));
    changed_[e.owner] = 1;
  }
  for (std::size_t a = 0; a < tree_.arcs.size(); ++a) {
    msg_[a][0] = Table();
    msg_[a][1] = Table();
    sep_old_[a] = Table::scalar(1.0);
    fresh_[a] = {0, 0};
  }
  for (int i = 0; i < n; ++i) {
    post_[i] = form_ == Form::joint ? expand(psi_[i], cluster_scope(i))
                                    : Table();
    post_fresh_[i] = 0;
  }
  propagated_ = false;
}

int EngineState::arc_between(int i, int j) const {
  for (auto [nb, arc] : adj_[i])
    if (nb == j) return arc;
  throw Error(ErrorCode::internal, "clusters are not adjacent");
}

int EngineState::direction_slot(int arc, int from) const {
  if (tree_.arcs[arc].first == from) return 0;
  if (tree_.arcs[arc].second == from) return 1;
  throw Error(ErrorCode::internal, "cluster not incident to arc");
}

void EngineState::invalidate_from(int cluster) {
  // Every message pointing away from the changed cluster summarizes data
  // that just changed. Walk outward and drop those directions.
  std::vector<int> stack{cluster};
  std::vector<char> seen(tree_.cluster_count(), 0);
  seen[cluster] = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (auto [nb, arc] : adj_[u]) {
      if (seen[nb]) continue;
      seen[nb] = 1;
      fresh_[arc][direction_slot(arc, u)] = 0;
      stack.push_back(nb);
    }
  }
  std::fill(post_fresh_.begin(), post_fresh_.end(), 0);
  propagated_ = false;
}

Table EngineState::message(int i, int j) {
  if (form_ != Form::factored)
    throw Error(ErrorCode::precondition, "messages exist in factored form");
  int arc = arc_between(i, j);
  int slot = direction_slot(arc, i);
  if (fresh_[arc][slot]) return msg_[arc][slot];
  Table prod = psi_[i];
  for (auto [nb, a] : adj_[i]) {
    if (a == arc || !arc_enabled_[a]) continue;
    prod = multiply(prod, message(nb, i));
  }
  Table m = expand(marginalize(prod, tree_.sepsets[arc]), sepset_scope(arc));
  msg_[arc][slot] = m;
  fresh_[arc][slot] = 1;
  ++stats_.messages_computed;
  stats_.computed.emplace_back(i, j);
  return m;
}

void EngineState::compute_posterior_factored(int i) {
  Table prod = psi_[i];
  for (auto [nb, arc] : adj_[i]) {
    if (!arc_enabled_[arc]) continue;
    prod = multiply(prod, message(nb, i));
  }
  post_[i] = expand(prod, cluster_scope(i));
  post_fresh_[i] = 1;
}

void EngineState::send_joint(int i, int j) {
  int arc = arc_between(i, j);
  int slot = direction_slot(arc, i);
  if (fresh_[arc][slot]) {
    ++stats_.sends_skipped;
    return;
  }
  Table sep_new = marginalize(post_[i], tree_.sepsets[arc]);
  Table ratio = divide(sep_new, sep_old_[arc]);
  post_[j] = multiply(post_[j], ratio);
  sep_old_[arc] = std::move(sep_new);
  fresh_[arc][slot] = 1;
  ++stats_.messages_computed;
  stats_.computed.emplace_back(i, j);
}

void EngineState::joint_collect(int node, int from_arc) {
  for (auto [nb, arc] : adj_[node]) {
    if (arc == from_arc || !arc_enabled_[arc]) continue;
    joint_collect(nb, arc);
    send_joint(nb, node);
  }
}

void EngineState::joint_distribute(int node, int from_arc) {
  for (auto [nb, arc] : adj_[node]) {
    if (arc == from_arc || !arc_enabled_[arc]) continue;
    send_joint(node, nb);
    post_fresh_[nb] = 1;
    joint_distribute(nb, arc);
  }
}

void EngineState::factored_distribute(int node, int from_arc) {
  for (auto [nb, arc] : adj_[node]) {
    if (arc == from_arc || !arc_enabled_[arc]) continue;
    message(node, nb);
    compute_posterior_factored(nb);
    factored_distribute(nb, arc);
  }
}

void EngineState::collect(int i) {
  if (form_ == Form::factored) {
    compute_posterior_factored(i);
  } else {
    joint_collect(i, -1);
    post_fresh_[i] = 1;
  }
}

void EngineState::distribute(int i) {
  if (form_ == Form::factored) {
    if (!post_fresh_[i]) compute_posterior_factored(i);
    factored_distribute(i, -1);
  } else {
    joint_distribute(i, -1);
  }
}

void EngineState::component_of(int root, std::vector<int>* out) {
  std::vector<char> seen(tree_.cluster_count(), 0);
  std::vector<int> stack{root};
  seen[root] = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    out->push_back(u);
    for (auto [nb, arc] : adj_[u]) {
      if (!arc_enabled_[arc] || seen[nb]) continue;
      seen[nb] = 1;
      stack.push_back(nb);
    }
  }
}

std::vector<int> EngineState::component_roots() {
  std::vector<char> seen(tree_.cluster_count(), 0);
  std::vector<int> roots;
  for (int i = 0; i < tree_.cluster_count(); ++i) {
    if (seen[i]) continue;
    roots.push_back(i);
    std::vector<int> comp;
    component_of(i, &comp);
    for (int c : comp) seen[c] = 1;
  }
  return roots;
}

void EngineState::propagate() {
  for (int root : component_roots()) {
    collect(root);
    distribute(root);
  }
  std::fill(changed_.begin(), changed_.end(), 0);
  propagated_ = true;
}

const Table& EngineState::posterior(int i) {
  if (!post_fresh_[i]) {
    if (form_ == Form::factored) {
      collect(i);
    } else {
      propagate();
    }
  }
  return post_[i];
}

Table EngineState::sepset_posterior(int i, int j) {
  int arc = arc_between(i, j);
  if (form_ == Form::factored)
    return expand(multiply(message(i, j), message(j, i)), sepset_scope(arc));
  if (!propagated_) propagate();
  return expand(sep_old_[arc], sepset_scope(arc));
}

double EngineState::component_mass(int root) {
  return sum_all(posterior(root));
}

double EngineState::prob_evidence() {
  if (!propagated_) propagate();
  if (global_posteriors_) return component_mass(component_roots().front());
  double p = 1.0;
  for (int root : component_roots()) p *= component_mass(root);
  return p;
}

Table EngineState::query_marginal(const std::vector<VariableId>& J) {
  if (!propagated_) propagate();
  std::vector<VariableId> sorted(J.begin(), J.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  int cluster = tree_.smallest_cluster_containing(sorted, *net_);
  if (cluster < 0)
    throw Error(ErrorCode::uncoverable_query,
                "query fits in no cluster of this tree");
  Table result = marginalize(posterior(cluster), sorted);
  // Other components contribute their evidence mass as a constant.
  std::vector<int> roots = component_roots();
  if (!global_posteriors_ && roots.size() > 1) {
    std::vector<int> comp;
    component_of(cluster, &comp);
    std::vector<char> mine(tree_.cluster_count(), 0);
    for (int c : comp) mine[c] = 1;
    double scale = 1.0;
    for (int root : roots)
      if (!mine[root]) scale *= component_mass(root);
    result = multiply(result, Table::scalar(scale));
  }
  return result;
}

int EngineState::enter_finding(const LikelihoodFinding& f) {
  int owner = tree_.smallest_cluster_containing(f.scope_vars, *net_);
  if (owner < 0)
    throw Error(ErrorCode::uncoverable_query,
                "finding scope fits in no cluster");
  Table t = sliced_factor(f.table);
  psi_[owner] = multiply(psi_[owner], t);
  if (form_ == Form::joint) post_[owner] = multiply(post_[owner], t);
  changed_[owner] = 1;
  last_changed_ = owner;
  invalidate_from(owner);
  entered_.push_back({f, owner, true});
  return static_cast<int>(entered_.size()) - 1;
}

void EngineState::retract_finding(int handle) {
  if (handle < 0 || handle >= static_cast<int>(entered_.size()) ||
      !entered_[handle].active)
    throw Error(ErrorCode::precondition, "unknown or inactive finding handle");
  Entered& e = entered_[handle];
  e.active = false;
  if (form_ == Form::factored) {
    Table t = sliced_factor(e.finding.table);
    bool positive = true;
    for (double v : t.values())
      if (v <= 0.0) positive = false;
    if (positive) {
      psi_[e.owner] = divide(psi_[e.owner], t);
      changed_[e.owner] = 1;
      last_changed_ = e.owner;
      invalidate_from(e.owner);
      return;
    }
  }
  // Joint form, or a finding with zero entries: rebuild from the inputs.
  initialize();
  last_changed_ = e.owner;
}

std::size_t EngineState::table_bytes() const {
  std::size_t total = 0;
  auto add = [&](const Table& t) { total += t.cells() * sizeof(double); };
  for (const Table& t : psi_) add(t);
  for (const Table& t : post_) add(t);
  for (const auto& pair : msg_) {
    add(pair[0]);
    add(pair[1]);
  }
  for (const Table& t : sep_old_) add(t);
  return total;
}

void EngineState::enable_all_arcs() {
  std::fill(arc_enabled_.begin(), arc_enabled_.end(), 1);
}

void EngineState::replace_arc(int arc, int new_a, int new_b) {
  if (arc < 0 || arc >= static_cast<int>(tree_.arcs.size()))
    throw Error(ErrorCode::precondition, "no such arc");
  auto sep = tree_.intersection(new_a, new_b);
  if (sep != tree_.sepsets[arc])
    throw Error(ErrorCode::precondition,
                "new endpoints do not share the arc's separator");
  tree_.arcs[arc] = {new_a, new_b};
  rebuild_adjacency();
}

void EngineState::mark_arc_stale(int arc) {
  fresh_[arc] = {0, 0};
  std::fill(post_fresh_.begin(), post_fresh_.end(), 0);
  propagated_ = false;
}

EngineState instantiate_tree(const EngineState& master,
                             const Assignment& x_k) {
  EngineState st = master;
  if (x_k.empty()) return st;
  std::vector<VariableId> kvars;
  for (const auto& [v, s] : x_k) kvars.push_back(v);
  std::sort(kvars.begin(), kvars.end());

  st.conditioning_.insert(st.conditioning_.end(), x_k.begin(), x_k.end());
  std::vector<char> touched(st.tree_.cluster_count(), 0);
  for (int i = 0; i < st.tree_.cluster_count(); ++i) {
    auto& members = st.tree_.clusters[i].members;
    std::vector<VariableId> kept;
    for (VariableId v : members)
      if (!std::binary_search(kvars.begin(), kvars.end(), v))
        kept.push_back(v);
    if (kept.size() != members.size()) touched[i] = 1;
    members = std::move(kept);
  }
  for (std::size_t a = 0; a < st.tree_.arcs.size(); ++a) {
    auto& sep = st.tree_.sepsets[a];
    std::vector<VariableId> kept;
    for (VariableId v : sep)
      if (!std::binary_search(kvars.begin(), kvars.end(), v))
        kept.push_back(v);
    sep = std::move(kept);
  }
  for (Table& t : st.psi_) t = slice(t, x_k);
  for (Table& t : st.post_) t = slice(t, x_k);
  for (auto& pair : st.msg_) {
    pair[0] = slice(pair[0], x_k);
    pair[1] = slice(pair[1], x_k);
  }
  for (Table& t : st.sep_old_) t = slice(t, x_k);
  // A cluster that lost variables now carries evidence about them: mark it
  // and drop every message that summarized it.
  for (int i = 0; i < st.tree_.cluster_count(); ++i) {
    if (!touched[i]) continue;
    st.changed_[i] = 1;
    st.last_changed_ = i;
    st.invalidate_from(i);
  }
  std::fill(st.post_fresh_.begin(), st.post_fresh_.end(), 0);
  st.propagated_ = false;
  return st;
}

EngineState make_calibrated_state(std::shared_ptr<const BeliefNetwork> net,
                                  ClusterTree tree,
                                  std::vector<Table> posteriors,
                                  std::vector<Table> sep_posteriors) {
  EngineState st(std::move(net), std::move(tree), Form::joint);
  st.post_ = std::move(posteriors);
  st.sep_old_ = std::move(sep_posteriors);
  std::fill(st.post_fresh_.begin(), st.post_fresh_.end(), 1);
  for (auto& f : st.fresh_) f = {1, 1};
  std::fill(st.changed_.begin(), st.changed_.end(), 0);
  st.propagated_ = true;
  st.global_posteriors_ = true;
  return st;
}

}  // namespace cbn
