#pragma once

#include <functional>
#include <map>
#include <random>
#include <vector>

#include "cbn/network.hpp"
#include "cbn/table.hpp"

namespace cbn::testing {

// ---- reference evaluation (independent of the table algebra) --------------
// Cell lookup and iteration done with local index arithmetic, so table
// operation results can be checked against plain nested loops.

using FullState = std::map<VariableId, int>;

double ref_cell(const Table& t, const FullState& state);

/// Visit every joint state of the given scope.
void for_each_state(const Scope& scope, const std::function<void(const FullState&)>& fn);

bool tables_close(const Table& a, const Table& b, double rel_tol,
                  double abs_tol = 0.0);

// ---- fixtures --------------------------------------------------------------

/// Eight binary variables named "1".."8" with arcs 1>4, 2>3, 2>5, 3>6, 4>6,
/// 6>7, 5>8, 6>8 and strictly positive distributions drawn from the seed.
BeliefNetwork chest_clinic(unsigned seed);

/// As above but without the 2>3 arc, which makes it singly connected.
BeliefNetwork chest_clinic_singly_connected(unsigned seed);

/// Random connected binary network on n variables (multiple parents allowed,
/// so usually multiply connected).
BeliefNetwork random_connected_binary(int n, unsigned seed);

/// Random singly connected binary network on n variables: a random spanning
/// tree skeleton with each edge oriented at random.
BeliefNetwork random_polytree(int n, unsigned seed);

/// Strictly positive random likelihood findings (and occasional exact
/// observations) on a few variables.
BeliefNetwork with_random_evidence(BeliefNetwork net, unsigned seed);

/// Fill every distribution of the network with seeded random rows.
void randomize_cpts(BeliefNetwork& net, unsigned seed);

Table random_table(const Scope& scope, unsigned seed, double lo = 0.0,
                   double hi = 1.0);

}  // namespace cbn::testing
