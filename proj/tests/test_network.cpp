#include <doctest.h>

#include <algorithm>
#include <set>

#include "cbn/network.hpp"
#include "support.hpp"

using namespace cbn;
using namespace cbn::testing;

namespace {

// 1-based edge for readability against the fixture's variable names.
std::pair<int, int> e(int a, int b) {
  return {std::min(a, b) - 1, std::max(a, b) - 1};
}

std::set<std::pair<int, int>> edge_set(const UndirectedGraph& g) {
  auto edges = g.edges();
  return {edges.begin(), edges.end()};
}

// Components of the graph induced on the nodes outside K.
std::vector<int> components_outside(const UndirectedGraph& g,
                                    const std::vector<VariableId>& K) {
  std::vector<int> comp(g.node_count(), -1);
  int next = 0;
  auto in_k = [&](int v) {
    return std::find(K.begin(), K.end(), v) != K.end();
  };
  for (int start = 0; start < g.node_count(); ++start) {
    if (comp[start] >= 0 || in_k(start)) continue;
    std::vector<int> stack{start};
    comp[start] = next;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int nb : g.neighbors(u)) {
        if (in_k(nb) || comp[nb] >= 0) continue;
        comp[nb] = next;
        stack.push_back(nb);
      }
    }
    ++next;
  }
  return comp;
}

}  // namespace

TEST_SUITE("network") {

TEST_CASE("a single binary node with a proper distribution validates") {
  BeliefNetwork net;
  net.add_variable("a", {"y", "n"});
  net.set_cpt(0, {0.5, 0.5});
  CHECK(validate(net).ok());
}

TEST_CASE("a row that sums past one is flagged with the node name") {
  BeliefNetwork net;
  net.add_variable("a", {"y", "n"});
  net.set_cpt(0, {0.6, 0.6});
  ValidationReport r = validate(net);
  CHECK(r.has(ViolationKind::cpt_not_normalized));
  bool named = false;
  for (const auto& v : r.violations)
    if (v.detail.find("a") != std::string::npos) named = true;
  CHECK(named);
}

TEST_CASE("mutual parents are reported as a cycle") {
  BeliefNetwork net;
  net.add_variable("a", {"y", "n"});
  net.add_variable("b", {"y", "n"});
  net.set_parents(0, {1});
  net.set_parents(1, {0});
  net.set_cpt(0, {0.5, 0.5, 0.5, 0.5});
  net.set_cpt(1, {0.5, 0.5, 0.5, 0.5});
  CHECK(validate(net).has(ViolationKind::cycle));
}

TEST_CASE("the fixture validates and any +0.1 perturbation fails") {
  BeliefNetwork net = chest_clinic(404);
  REQUIRE(validate(net).ok());
  for (int child = 0; child < net.size(); ++child) {
    for (std::size_t cell = 0; cell < net.cpts[child].table.cells(); ++cell) {
      BeliefNetwork bad = net;
      bad.cpts[child].table.cell(cell) += 0.1;
      CHECK_FALSE(validate(bad).ok());
    }
  }
}

TEST_CASE("moralizing the fixture adds exactly the edges (3,4) and (5,6)") {
  BeliefNetwork net = chest_clinic(1);
  UndirectedGraph g = moral_graph(net);
  std::set<std::pair<int, int>> expect = {e(1, 4), e(2, 3), e(2, 5), e(3, 6),
                                          e(4, 6), e(6, 7), e(5, 8), e(6, 8),
                                          e(3, 4), e(5, 6)};
  CHECK(edge_set(g) == expect);
}

TEST_CASE("a chain moralizes to its own skeleton") {
  BeliefNetwork net;
  net.add_variable("a", {"y", "n"});
  net.add_variable("b", {"y", "n"});
  net.add_variable("c", {"y", "n"});
  net.set_parents(1, {0});
  net.set_parents(2, {1});
  randomize_cpts(net, 2);
  std::set<std::pair<int, int>> expect = {{0, 1}, {1, 2}};
  CHECK(edge_set(moral_graph(net)) == expect);
}

TEST_CASE("a v-structure moralizes to a triangle") {
  BeliefNetwork net;
  net.add_variable("a", {"y", "n"});
  net.add_variable("b", {"y", "n"});
  net.add_variable("c", {"y", "n"});
  net.set_parents(2, {0, 1});
  randomize_cpts(net, 3);
  std::set<std::pair<int, int>> expect = {{0, 2}, {1, 2}, {0, 1}};
  CHECK(edge_set(moral_graph(net)) == expect);
}

TEST_CASE("moralizing adds nothing when co-parents are already linked") {
  BeliefNetwork net;
  net.add_variable("a", {"y", "n"});
  net.add_variable("b", {"y", "n"});
  net.add_variable("c", {"y", "n"});
  net.set_parents(1, {0});
  net.set_parents(2, {0, 1});
  randomize_cpts(net, 4);
  // co-parents of c are a, b which share an arc already
  std::set<std::pair<int, int>> expect = {{0, 1}, {0, 2}, {1, 2}};
  CHECK(edge_set(moral_graph(net)) == expect);
}

TEST_CASE("cutting node 2's outgoing arcs renders the fixture singly connected") {
  BeliefNetwork net = chest_clinic(5);
  CHECK_FALSE(is_singly_connected(net));
  BeliefNetwork cut = cut_outgoing_arcs(net, {1});  // node named "2"
  CHECK(is_singly_connected(cut));
  // the original network is untouched
  CHECK_FALSE(is_singly_connected(net));
  // the affected children keep their full tables
  CHECK(cut.cpts[2].table.scope() == net.cpts[2].table.scope());
}

TEST_CASE("cutting the empty set changes nothing") {
  BeliefNetwork net = chest_clinic(6);
  BeliefNetwork cut = cut_outgoing_arcs(net, {});
  for (int v = 0; v < net.size(); ++v)
    CHECK(cut.cpts[v].parents == net.cpts[v].parents);
}

TEST_CASE("cutting every node removes all arcs") {
  BeliefNetwork net = chest_clinic(7);
  std::vector<VariableId> all;
  for (int v = 0; v < net.size(); ++v) all.push_back(v);
  BeliefNetwork cut = cut_outgoing_arcs(net, all);
  for (int v = 0; v < net.size(); ++v) CHECK(cut.cpts[v].parents.empty());
}

TEST_CASE("removing the 2-3 arc renders the fixture singly connected") {
  CHECK(is_singly_connected(chest_clinic_singly_connected(8)));
}

TEST_CASE("a single node is singly connected") {
  BeliefNetwork net;
  net.add_variable("a", {"y", "n"});
  net.set_cpt(0, {0.5, 0.5});
  CHECK(is_singly_connected(net));
}

TEST_CASE("observation stores an indicator finding") {
  BeliefNetwork net;
  net.add_variable("a", {"y", "n"});
  net.set_cpt(0, {0.3, 0.7});
  net = observe(std::move(net), 0, "y");
  REQUIRE(net.evidence.size() == 1);
  CHECK(net.evidence[0].table[0] == 1.0);
  CHECK(net.evidence[0].table[1] == 0.0);
}

TEST_CASE("likelihood findings are stored verbatim and accumulate") {
  BeliefNetwork net;
  net.add_variable("a", {"y", "n"});
  net.set_cpt(0, {0.3, 0.7});
  LikelihoodFinding f;
  f.scope_vars = {0};
  f.table = Table(net.scope_of({0}), {0.3, 0.7});
  net = add_finding(std::move(net), f);
  net = add_finding(std::move(net), f);
  REQUIRE(net.evidence.size() == 2);
  CHECK(net.evidence[1].table[0] == 0.3);
}

TEST_CASE("observing an unknown state fails") {
  BeliefNetwork net;
  net.add_variable("a", {"y", "n"});
  net.set_cpt(0, {0.3, 0.7});
  CHECK_THROWS_AS(observe(std::move(net), 0, "maybe"), Error);
}

TEST_CASE("cutting separates exactly the paths through K in the moral graph") {
  // Components of the moral graph induced outside K must match before and
  // after cutting: surviving paths never needed K, vanished ones did.
  for (unsigned seed : {61u, 62u, 63u, 64u, 65u}) {
    BeliefNetwork net = random_connected_binary(9, seed);
    std::vector<VariableId> K = {static_cast<VariableId>(seed % 9),
                                 static_cast<VariableId>((seed / 3) % 9)};
    std::sort(K.begin(), K.end());
    K.erase(std::unique(K.begin(), K.end()), K.end());
    UndirectedGraph before = moral_graph(net);
    UndirectedGraph after = moral_graph(cut_outgoing_arcs(net, K));
    std::vector<int> cb = components_outside(before, K);
    std::vector<int> ca = components_outside(after, K);
    for (int u = 0; u < net.size(); ++u)
      for (int v = u + 1; v < net.size(); ++v) {
        if (cb[u] < 0 || cb[v] < 0) continue;
        CHECK((cb[u] == cb[v]) == (ca[u] == ca[v]));
      }
  }
}

}  // TEST_SUITE
