#pragma once

#include <atomic>
#include <cstddef>
#include <utility>
#include <vector>

#include "cbn/types.hpp"

namespace cbn {

/// Ordered set of variables with their state counts. Variable ids are kept
/// strictly ascending; in any table laid out over a scope the *last* (largest
/// id) variable varies fastest.
struct Scope {
  std::vector<VariableId> vars;
  std::vector<int> card;

  std::size_t cells() const;
  bool contains(VariableId v) const { return position_of(v) >= 0; }
  int position_of(VariableId v) const;
  bool operator==(const Scope&) const = default;
};

/// Union of two scopes; throws if a shared variable has conflicting counts.
Scope scope_union(const Scope& a, const Scope& b);

/// Dense non-negative real table over a Scope. An empty scope is a single
/// scalar cell. This is the one numeric carrier used everywhere: cluster
/// potentials, messages, separator and posterior tables.
///
/// Payload bytes of all live tables are tracked globally (with a high-water
/// mark) so that memory-bounded runs can be measured without hooking the
/// allocator.
class Table {
 public:
  Table() : Table(Scope{}, 0.0) {}
  explicit Table(Scope scope, double fill = 0.0);
  Table(Scope scope, std::vector<double> values);
  static Table scalar(double value);

  /// Build a table from values laid out over `order` (last listed variable
  /// fastest), reordering into the canonical ascending layout. `order` need
  /// not be sorted; this is how file formats with declared-order rows are
  /// brought into the engine.
  static Table from_ordered(const std::vector<VariableId>& order,
                            const std::vector<int>& cards,
                            const std::vector<double>& values);

  Table(const Table& other);
  Table(Table&& other) noexcept;
  Table& operator=(const Table& other);
  Table& operator=(Table&& other) noexcept;
  ~Table();

  const Scope& scope() const { return scope_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t cells() const { return values_.size(); }
  bool is_scalar() const { return scope_.vars.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& cell(std::size_t i) { return values_[i]; }

  /// Linear index of a full assignment (must cover every scope variable).
  std::size_t index_of(const Assignment& assignment) const;

  /// this[cells matching `fixed`] += scale * part[...]; `part`'s scope plus
  /// the fixed variables must be contained in this table's scope. Used to
  /// accumulate per-instantiation results into a wider target in place.
  void add_scaled_at(const Table& part, const Assignment& fixed, double scale);

  static std::size_t live_bytes();
  static std::size_t peak_bytes();
  static void reset_peak();

 private:
  void account(std::size_t payload);

  Scope scope_;
  std::vector<double> values_;
  std::size_t accounted_ = 0;
};

/// Cell-wise product over the union scope; a scalar acts as a constant.
Table multiply(const Table& a, const Table& b);

/// Sum out every variable not in `keep` (ids absent from the scope are
/// ignored). keep = {} yields the scalar total.
Table marginalize(const Table& t, const std::vector<VariableId>& keep);

/// Cell-wise ratio; den's scope must be contained in num's. 0/0 yields 0;
/// positive/0 throws, since it can only arise from an inconsistent state.
Table divide(const Table& num, const Table& den);

/// Fix some variables to given states and drop them from the scope.
/// Variables not in the scope are ignored.
Table slice(const Table& t, const Assignment& fix);

/// Replicate t over the extra variables of `target` (target scope must
/// contain t's scope).
Table expand(const Table& t, const Scope& target);

double sum_all(const Table& t);

/// (t / sum, sum); throws on an all-zero table.
std::pair<Table, double> normalize(const Table& t);

}  // namespace cbn
