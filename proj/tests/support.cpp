#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cbn::testing {

double ref_cell(const Table& t, const FullState& state) {
  const Scope& s = t.scope();
  std::size_t idx = 0;
  for (std::size_t d = 0; d < s.vars.size(); ++d) {
    auto it = state.find(s.vars[d]);
    if (it == state.end()) throw std::runtime_error("state misses a variable");
    idx = idx * static_cast<std::size_t>(s.card[d]) +
          static_cast<std::size_t>(it->second);
  }
  return t[idx];
}

void for_each_state(const Scope& scope,
                    const std::function<void(const FullState&)>& fn) {
  std::vector<int> digits(scope.vars.size(), 0);
  for (;;) {
    FullState state;
    for (std::size_t d = 0; d < scope.vars.size(); ++d)
      state[scope.vars[d]] = digits[d];
    fn(state);
    int d = static_cast<int>(digits.size()) - 1;
    while (d >= 0 && ++digits[d] == scope.card[d]) digits[d--] = 0;
    if (d < 0) break;
  }
}

bool tables_close(const Table& a, const Table& b, double rel_tol,
                  double abs_tol) {
  if (!(a.scope() == b.scope())) return false;
  for (std::size_t i = 0; i < a.cells(); ++i) {
    double x = a[i], y = b[i];
    double diff = std::abs(x - y);
    double scale = std::max(std::abs(x), std::abs(y));
    if (diff > abs_tol && diff > rel_tol * scale) return false;
  }
  return true;
}

void randomize_cpts(BeliefNetwork& net, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  for (int child = 0; child < net.size(); ++child) {
    const Cpt& cpt = net.cpts[child];
    std::size_t rows = 1;
    for (VariableId p : cpt.parents) rows *= static_cast<std::size_t>(net.card(p));
    std::vector<double> values;
    for (std::size_t r = 0; r < rows; ++r) {
      std::vector<double> row(static_cast<std::size_t>(net.card(child)));
      double total = 0.0;
      for (double& x : row) total += (x = unif(rng));
      for (double x : row) values.push_back(x / total);
    }
    net.set_cpt(child, values);
  }
}

namespace {

BeliefNetwork chest_clinic_structure(bool with_2_to_3) {
  BeliefNetwork net;
  net.name = "chest-clinic";
  for (int i = 1; i <= 8; ++i)
    net.add_variable(std::to_string(i), {"yes", "no"});
  auto id = [&](int label) { return label - 1; };
  net.set_parents(id(4), {id(1)});
  if (with_2_to_3)
    net.set_parents(id(3), {id(2)});
  net.set_parents(id(5), {id(2)});
  net.set_parents(id(6), {id(3), id(4)});
  net.set_parents(id(7), {id(6)});
  net.set_parents(id(8), {id(5), id(6)});
  return net;
}

}  // namespace

BeliefNetwork chest_clinic(unsigned seed) {
  BeliefNetwork net = chest_clinic_structure(true);
  randomize_cpts(net, seed);
  return net;
}

BeliefNetwork chest_clinic_singly_connected(unsigned seed) {
  BeliefNetwork net = chest_clinic_structure(false);
  randomize_cpts(net, seed);
  return net;
}

BeliefNetwork random_connected_binary(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  BeliefNetwork net;
  net.name = "random";
  for (int i = 0; i < n; ++i)
    net.add_variable("v" + std::to_string(i), {"t", "f"});
  // Connect each new node to an earlier one, then sprinkle extra arcs.
  std::vector<std::vector<VariableId>> parents(n);
  for (int i = 1; i < n; ++i) {
    int p = static_cast<int>(rng() % static_cast<unsigned long>(i));
    parents[i].push_back(p);
  }
  int extras = n / 2;
  for (int e = 0; e < extras; ++e) {
    int child = 1 + static_cast<int>(rng() % static_cast<unsigned long>(n - 1));
    int p = static_cast<int>(rng() % static_cast<unsigned long>(child));
    if (std::find(parents[child].begin(), parents[child].end(), p) ==
        parents[child].end())
      parents[child].push_back(p);
  }
  for (int i = 0; i < n; ++i) net.set_parents(i, parents[i]);
  randomize_cpts(net, static_cast<unsigned>(rng()));
  return net;
}

BeliefNetwork random_polytree(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  BeliefNetwork net;
  net.name = "polytree";
  for (int i = 0; i < n; ++i)
    net.add_variable("v" + std::to_string(i), {"t", "f"});
  std::vector<std::vector<VariableId>> parents(n);
  for (int i = 1; i < n; ++i) {
    int other = static_cast<int>(rng() % static_cast<unsigned long>(i));
    // Either orientation of a tree edge keeps the skeleton a tree.
    if (rng() % 2)
      parents[i].push_back(other);
    else
      parents[other].push_back(i);
  }
  for (int i = 0; i < n; ++i) net.set_parents(i, parents[i]);
  randomize_cpts(net, static_cast<unsigned>(rng()));
  return net;
}

BeliefNetwork with_random_evidence(BeliefNetwork net, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  int findings = 1 + static_cast<int>(rng() % 3);
  for (int k = 0; k < findings; ++k) {
    VariableId v =
        static_cast<VariableId>(rng() % static_cast<unsigned long>(net.size()));
    if (rng() % 4 == 0) {
      int state = static_cast<int>(rng() % static_cast<unsigned long>(net.card(v)));
      LikelihoodFinding f = indicator_finding(net, v, state);
      net = add_finding(std::move(net), std::move(f));
    } else {
      LikelihoodFinding f;
      f.scope_vars = {v};
      Table t(net.scope_of({v}));
      for (std::size_t i = 0; i < t.cells(); ++i) t.cell(i) = unif(rng);
      f.table = std::move(t);
      net = add_finding(std::move(net), std::move(f));
    }
  }
  return net;
}

Table random_table(const Scope& scope, unsigned seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(lo, hi);
  Table t(scope);
  for (std::size_t i = 0; i < t.cells(); ++i) t.cell(i) = unif(rng);
  return t;
}

}  // namespace cbn::testing
