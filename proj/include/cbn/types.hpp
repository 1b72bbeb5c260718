#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cbn {

/// Variables are identified by small dense integers in [0, n).
using VariableId = int;

/// Partial assignment of state indices to variables.
using Assignment = std::vector<std::pair<VariableId, int>>;

enum class ErrorCode {
  usage,                // bad flags / inconsistent request
  parse,                // malformed input file
  impossible_evidence,  // entered evidence has probability zero
  uncoverable_query,    // query or finding scope fits in no cluster
  invalid_cutset,       // conditioning set does not cut all loops
  precondition,         // operation applied outside its stated domain
  internal,             // inconsistent engine state
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cbn
