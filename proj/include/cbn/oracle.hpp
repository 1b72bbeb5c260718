#pragma once

#include "cbn/network.hpp"

namespace cbn {

/// Ground truth by full enumeration. Deliberately slow and written without
/// the table algebra used by the engines, so the two can check each other.
struct OracleOptions {
  std::size_t max_cells = std::size_t(1) << 24;
};

/// Joint over all variables: product of every distribution and finding at
/// each full configuration. Throws when the state space exceeds the cap.
Table oracle_joint(const BeliefNetwork& net, const OracleOptions& options = {});

/// Unnormalized Pr{X_J, evidence} by direct summation of the joint.
Table oracle_marginal(const BeliefNetwork& net,
                      const std::vector<VariableId>& J,
                      const OracleOptions& options = {});

/// Same quantity by one-variable-at-a-time elimination over the engine's
/// table algebra; an independent second route used for self-checks.
Table oracle_marginal_elimination(const BeliefNetwork& net,
                                  const std::vector<VariableId>& J,
                                  const OracleOptions& options = {});

}  // namespace cbn
