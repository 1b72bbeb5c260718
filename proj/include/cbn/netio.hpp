#pragma once

#include <iosfwd>
#include <string>

#include "cbn/network.hpp"

namespace cbn {

// Line-oriented text formats. `#` starts a comment, tokens are whitespace
// separated.
//
// Network file:
//   network <name>
//   variable <name> <k> <state_0> ... <state_{k-1}>
//   parents <child-name> [<parent-name> ...]
//   cpt <child-name> <p_0> <p_1> ...
// CPT values run over the declared parents in declared order (first parent
// slowest) with the child fastest.
//
// Evidence file:
//   observe <variable-name> <state-label>
//   likelihood <variable-name> <l_0> ... <l_{k-1}>
//   likelihood-joint <v1> ... <vm> : <values, v_m fastest>

BeliefNetwork read_network(std::istream& in, const std::string& display_name);
BeliefNetwork read_network_file(const std::string& path);
BeliefNetwork read_network_string(const std::string& text);

void apply_evidence(BeliefNetwork& net, std::istream& in,
                    const std::string& display_name);
BeliefNetwork read_evidence_file(BeliefNetwork net, const std::string& path);
BeliefNetwork read_evidence_string(BeliefNetwork net, const std::string& text);

std::string write_network(const BeliefNetwork& net);
std::string write_evidence(const BeliefNetwork& net);

}  // namespace cbn
