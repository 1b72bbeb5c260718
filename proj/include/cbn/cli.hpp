#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cbn {

/// Command-line front end. Subcommands: validate, compile, infer, condition,
/// restructure, oracle, compare. Exit codes: 0 ok, 1 usage or parse error,
/// 2 impossible evidence, 3 uncoverable query, 4 invalid cutset.
int run_cli(std::vector<std::string> args, std::ostream& out,
            std::ostream& err);

}  // namespace cbn
