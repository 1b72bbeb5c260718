#include "cbn/oracle.hpp"

#include <algorithm>
#include <list>

namespace cbn {

namespace {

// Value of a stored table at a full configuration, with index arithmetic
// done here rather than through the table helpers.
double value_at(const Table& t, const std::vector<int>& state) {
  std::size_t idx = 0;
  const Scope& s = t.scope();
  for (std::size_t d = 0; d < s.vars.size(); ++d)
    idx = idx * static_cast<std::size_t>(s.card[d]) +
          static_cast<std::size_t>(state[s.vars[d]]);
  return t[idx];
}

std::size_t checked_cells(const BeliefNetwork& net,
                          const OracleOptions& options) {
  std::size_t cells = 1;
  for (int v = 0; v < net.size(); ++v) {
    std::size_t c = static_cast<std::size_t>(net.card(v));
    if (cells > options.max_cells / c)
      throw Error(ErrorCode::precondition,
                  "state space exceeds the enumeration cap");
    cells *= c;
  }
  return cells;
}

}  // namespace

Table oracle_joint(const BeliefNetwork& net, const OracleOptions& options) {
  std::size_t cells = checked_cells(net, options);
  std::vector<VariableId> all(net.size());
  for (int v = 0; v < net.size(); ++v) all[v] = v;
  Table joint(net.scope_of(all), 0.0);
  std::vector<int> state(net.size(), 0);
  for (std::size_t idx = 0; idx < cells; ++idx) {
    double p = 1.0;
    for (const Cpt& cpt : net.cpts) p *= value_at(cpt.table, state);
    for (const LikelihoodFinding& f : net.evidence)
      p *= value_at(f.table, state);
    joint.cell(idx) = p;
    int d = net.size() - 1;
    while (d >= 0 && ++state[d] == net.card(d)) state[d--] = 0;
  }
  return joint;
}

Table oracle_marginal(const BeliefNetwork& net,
                      const std::vector<VariableId>& J,
                      const OracleOptions& options) {
  Table joint = oracle_joint(net, options);
  std::vector<VariableId> keep(J.begin(), J.end());
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  Table out(net.scope_of(keep), 0.0);
  std::vector<int> state(net.size(), 0);
  for (std::size_t idx = 0; idx < joint.cells(); ++idx) {
    std::size_t oidx = 0;
    for (VariableId v : keep)
      oidx = oidx * static_cast<std::size_t>(net.card(v)) +
             static_cast<std::size_t>(state[v]);
    out.cell(oidx) += joint[idx];
    int d = net.size() - 1;
    while (d >= 0 && ++state[d] == net.card(d)) state[d--] = 0;
  }
  return out;
}

Table oracle_marginal_elimination(const BeliefNetwork& net,
                                  const std::vector<VariableId>& J,
                                  const OracleOptions& options) {
  checked_cells(net, options);
  std::vector<VariableId> keep(J.begin(), J.end());
  std::sort(keep.begin(), keep.end());
  std::list<Table> factors;
  for (const Cpt& cpt : net.cpts) factors.push_back(cpt.table);
  for (const LikelihoodFinding& f : net.evidence) factors.push_back(f.table);
  for (int v = 0; v < net.size(); ++v) {
    if (std::binary_search(keep.begin(), keep.end(), v)) continue;
    Table bucket = Table::scalar(1.0);
    for (auto it = factors.begin(); it != factors.end();) {
      if (it->scope().contains(v)) {
        bucket = multiply(bucket, *it);
        it = factors.erase(it);
      } else {
        ++it;
      }
    }
    std::vector<VariableId> rest;
    for (VariableId u : bucket.scope().vars)
      if (u != v) rest.push_back(u);
    factors.push_back(marginalize(bucket, rest));
  }
  Table result = Table::scalar(1.0);
  for (const Table& f : factors) result = multiply(result, f);
  return expand(marginalize(result, keep), net.scope_of(keep));
}

}  // namespace cbn
