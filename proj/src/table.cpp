#include "cbn/table.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>

namespace cbn {

namespace {

std::atomic<std::size_t> g_live{0};
std::atomic<std::size_t> g_peak{0};

void bump_peak() {
  std::size_t live = g_live.load(std::memory_order_relaxed);
  std::size_t peak = g_peak.load(std::memory_order_relaxed);
  while (live > peak &&
         !g_peak.compare_exchange_weak(peak, live, std::memory_order_relaxed)) {
  }
}

// Per-dimension stride of `outer` into the linear index of `inner`; zero for
// dimensions absent from inner. Layout is row-major, last variable fastest.
std::vector<std::size_t> dim_strides_into(const Scope& outer,
                                          const Scope& inner) {
  std::vector<std::size_t> inner_stride(inner.vars.size());
  std::size_t acc = 1;
  for (int d = static_cast<int>(inner.vars.size()) - 1; d >= 0; --d) {
    inner_stride[d] = acc;
    acc *= static_cast<std::size_t>(inner.card[d]);
  }
  std::vector<std::size_t> out(outer.vars.size(), 0);
  for (std::size_t d = 0; d < outer.vars.size(); ++d) {
    int p = inner.position_of(outer.vars[d]);
    if (p >= 0) out[d] = inner_stride[p];
  }
  return out;
}

// Walks every cell of `shape` while maintaining linear indices into mapped
// subscopes via precomputed per-dimension strides.
struct Walker {
  const Scope& shape;
  std::vector<int> digits;
  explicit Walker(const Scope& s) : shape(s), digits(s.vars.size(), 0) {}

  // Advances digits and the mapped indices; returns false after the last cell.
  bool next(std::size_t* ia, const std::vector<std::size_t>& sa,
            std::size_t* ib = nullptr,
            const std::vector<std::size_t>* sb = nullptr) {
    int d = static_cast<int>(digits.size()) - 1;
    while (d >= 0) {
      if (++digits[d] < shape.card[d]) {
        *ia += sa[d];
        if (ib) *ib += (*sb)[d];
        return true;
      }
      digits[d] = 0;
      *ia -= sa[d] * static_cast<std::size_t>(shape.card[d] - 1);
      if (ib) *ib -= (*sb)[d] * static_cast<std::size_t>(shape.card[d] - 1);
      --d;
    }
    return false;
  }
};

}  // namespace

std::size_t Scope::cells() const {
  std::size_t n = 1;
  for (int c : card) n *= static_cast<std::size_t>(c);
  return n;
}

int Scope::position_of(VariableId v) const {
  auto it = std::lower_bound(vars.begin(), vars.end(), v);
  if (it == vars.end() || *it != v) return -1;
  return static_cast<int>(it - vars.begin());
}

Scope scope_union(const Scope& a, const Scope& b) {
  Scope u;
  std::size_t i = 0, j = 0;
  while (i < a.vars.size() || j < b.vars.size()) {
    if (j == b.vars.size() || (i < a.vars.size() && a.vars[i] < b.vars[j])) {
      u.vars.push_back(a.vars[i]);
      u.card.push_back(a.card[i]);
      ++i;
    } else if (i == a.vars.size() || b.vars[j] < a.vars[i]) {
      u.vars.push_back(b.vars[j]);
      u.card.push_back(b.card[j]);
      ++j;
    } else {
      if (a.card[i] != b.card[j])
        throw Error(ErrorCode::internal,
                    "conflicting cardinalities for shared variable " +
                        std::to_string(a.vars[i]));
      u.vars.push_back(a.vars[i]);
      u.card.push_back(a.card[i]);
      ++i;
      ++j;
    }
  }
  return u;
}

void Table::account(std::size_t payload) {
  if (payload == accounted_) return;
  if (payload > accounted_) {
    g_live.fetch_add(payload - accounted_, std::memory_order_relaxed);
    accounted_ = payload;
    bump_peak();
  } else {
    g_live.fetch_sub(accounted_ - payload, std::memory_order_relaxed);
    accounted_ = payload;
  }
}

Table::Table(Scope scope, double fill)
    : scope_(std::move(scope)), values_(scope_.cells(), fill) {
  account(values_.size() * sizeof(double));
}

Table::Table(Scope scope, std::vector<double> values)
    : scope_(std::move(scope)), values_(std::move(values)) {
  if (values_.size() != scope_.cells())
    throw Error(ErrorCode::internal, "table value count does not match scope");
  account(values_.size() * sizeof(double));
}

Table Table::scalar(double value) { return Table(Scope{}, {value}); }

Table Table::from_ordered(const std::vector<VariableId>& order,
                          const std::vector<int>& cards,
                          const std::vector<double>& values) {
  if (order.size() != cards.size())
    throw Error(ErrorCode::internal, "order/cardinality size mismatch");
  Scope given{order, cards};  // not necessarily ascending; used for strides
  Scope sorted;
  {
    std::vector<std::size_t> perm(order.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::sort(perm.begin(), perm.end(),
              [&](std::size_t x, std::size_t y) { return order[x] < order[y]; });
    for (std::size_t i : perm) {
      if (!sorted.vars.empty() && sorted.vars.back() == order[i])
        throw Error(ErrorCode::internal, "duplicate variable in table order");
      sorted.vars.push_back(order[i]);
      sorted.card.push_back(cards[i]);
    }
  }
  if (values.size() != sorted.cells())
    throw Error(ErrorCode::internal, "table value count does not match scope");
  Table out(sorted);
  // The same digit walk indexes both layouts; strides differ.
  std::vector<std::size_t> src_stride(order.size());
  {
    std::size_t acc = 1;
    for (int d = static_cast<int>(order.size()) - 1; d >= 0; --d) {
      src_stride[d] = acc;
      acc *= static_cast<std::size_t>(cards[d]);
    }
  }
  std::vector<std::size_t> dst_stride = dim_strides_into(given, sorted);
  std::size_t is = 0, id = 0;
  Walker w(given);
  for (;;) {
    out.cell(id) = values[is];
    if (!w.next(&is, src_stride, &id, &dst_stride)) break;
  }
  return out;
}

Table::Table(const Table& other)
    : scope_(other.scope_), values_(other.values_) {
  account(values_.size() * sizeof(double));
}

Table::Table(Table&& other) noexcept
    : scope_(std::move(other.scope_)),
      values_(std::move(other.values_)),
      accounted_(other.accounted_) {
  other.accounted_ = 0;
  other.values_.clear();
}

Table& Table::operator=(const Table& other) {
  if (this == &other) return *this;
  scope_ = other.scope_;
  values_ = other.values_;
  account(values_.size() * sizeof(double));
  return *this;
}

Table& Table::operator=(Table&& other) noexcept {
  if (this == &other) return *this;
  g_live.fetch_sub(accounted_, std::memory_order_relaxed);
  scope_ = std::move(other.scope_);
  values_ = std::move(other.values_);
  accounted_ = other.accounted_;
  other.accounted_ = 0;
  other.values_.clear();
  return *this;
}

Table::~Table() {
  g_live.fetch_sub(accounted_, std::memory_order_relaxed);
}

std::size_t Table::index_of(const Assignment& assignment) const {
  std::size_t idx = 0;
  std::size_t stride = 1;
  for (int d = static_cast<int>(scope_.vars.size()) - 1; d >= 0; --d) {
    int state = -1;
    for (const auto& [v, s] : assignment) {
      if (v == scope_.vars[d]) {
        state = s;
        break;
      }
    }
    if (state < 0 || state >= scope_.card[d])
      throw Error(ErrorCode::internal, "assignment does not cover table scope");
    idx += stride * static_cast<std::size_t>(state);
    stride *= static_cast<std::size_t>(scope_.card[d]);
  }
  return idx;
}

void Table::add_scaled_at(const Table& part, const Assignment& fixed,
                          double scale) {
  std::size_t base = 0;
  {
    std::size_t stride = 1;
    std::vector<std::size_t> strides(scope_.vars.size());
    for (int d = static_cast<int>(scope_.vars.size()) - 1; d >= 0; --d) {
      strides[d] = stride;
      stride *= static_cast<std::size_t>(scope_.card[d]);
    }
    for (const auto& [v, s] : fixed) {
      int p = scope_.position_of(v);
      if (p < 0) continue;
      if (s < 0 || s >= scope_.card[p])
        throw Error(ErrorCode::internal, "state index out of range");
      base += strides[p] * static_cast<std::size_t>(s);
    }
  }
  std::vector<std::size_t> sd = dim_strides_into(part.scope(), scope_);
  for (std::size_t d = 0; d < part.scope().vars.size(); ++d)
    if (sd[d] == 0 && !part.scope().vars.empty() &&
        scope_.position_of(part.scope().vars[d]) < 0)
      throw Error(ErrorCode::internal, "accumulated part outside target scope");
  std::vector<std::size_t> ss(part.scope().vars.size());
  {
    std::size_t acc = 1;
    for (int d = static_cast<int>(part.scope().vars.size()) - 1; d >= 0; --d) {
      ss[d] = acc;
      acc *= static_cast<std::size_t>(part.scope().card[d]);
    }
  }
  std::size_t is = 0, id = base;
  Walker w(part.scope());
  for (;;) {
    values_[id] += scale * part[is];
    if (!w.next(&is, ss, &id, &sd)) break;
  }
}

std::size_t Table::live_bytes() { return g_live.load(std::memory_order_relaxed); }
std::size_t Table::peak_bytes() { return g_peak.load(std::memory_order_relaxed); }
void Table::reset_peak() {
  g_peak.store(g_live.load(std::memory_order_relaxed),
               std::memory_order_relaxed);
}

Table multiply(const Table& a, const Table& b) {
  Scope u = scope_union(a.scope(), b.scope());
  std::vector<std::size_t> sa = dim_strides_into(u, a.scope());
  std::vector<std::size_t> sb = dim_strides_into(u, b.scope());
  Table out(u);
  std::size_t ia = 0, ib = 0, i = 0;
  Walker w(u);
  for (;;) {
    out.cell(i++) = a[ia] * b[ib];
    if (!w.next(&ia, sa, &ib, &sb)) break;
  }
  return out;
}

Table marginalize(const Table& t, const std::vector<VariableId>& keep) {
  Scope restricted;
  for (std::size_t d = 0; d < t.scope().vars.size(); ++d) {
    if (std::find(keep.begin(), keep.end(), t.scope().vars[d]) != keep.end()) {
      restricted.vars.push_back(t.scope().vars[d]);
      restricted.card.push_back(t.scope().card[d]);
    }
  }
  if (restricted == t.scope()) return t;
  std::vector<std::size_t> sd = dim_strides_into(t.scope(), restricted);
  std::vector<std::size_t> ss(t.scope().vars.size());
  {
    std::size_t acc = 1;
    for (int d = static_cast<int>(t.scope().vars.size()) - 1; d >= 0; --d) {
      ss[d] = acc;
      acc *= static_cast<std::size_t>(t.scope().card[d]);
    }
  }
  Table out(restricted, 0.0);
  std::size_t is = 0, id = 0;
  Walker w(t.scope());
  for (;;) {
    out.cell(id) += t[is];
    if (!w.next(&is, ss, &id, &sd)) break;
  }
  return out;
}

Table divide(const Table& num, const Table& den) {
  for (VariableId v : den.scope().vars)
    if (!num.scope().contains(v))
      throw Error(ErrorCode::internal,
                  "divisor scope not contained in dividend scope");
  std::vector<std::size_t> sd = dim_strides_into(num.scope(), den.scope());
  std::vector<std::size_t> sn(num.scope().vars.size());
  {
    std::size_t acc = 1;
    for (int d = static_cast<int>(num.scope().vars.size()) - 1; d >= 0; --d) {
      sn[d] = acc;
      acc *= static_cast<std::size_t>(num.scope().card[d]);
    }
  }
  Table out(num.scope());
  std::size_t in = 0, id = 0;
  Walker w(num.scope());
  for (;;) {
    double n = num[in], d = den[id];
    if (d == 0.0) {
      if (n != 0.0)
        throw Error(ErrorCode::internal,
                    "division of positive value by zero separator entry");
      out.cell(in) = 0.0;  // 0/0 convention
    } else {
      out.cell(in) = n / d;
    }
    if (!w.next(&in, sn, &id, &sd)) break;
  }
  return out;
}

Table slice(const Table& t, const Assignment& fix) {
  Scope kept;
  std::size_t base = 0;
  std::vector<std::size_t> ts(t.scope().vars.size());
  {
    std::size_t acc = 1;
    for (int d = static_cast<int>(t.scope().vars.size()) - 1; d >= 0; --d) {
      ts[d] = acc;
      acc *= static_cast<std::size_t>(t.scope().card[d]);
    }
  }
  for (std::size_t d = 0; d < t.scope().vars.size(); ++d) {
    int state = -1;
    for (const auto& [v, s] : fix)
      if (v == t.scope().vars[d]) state = s;
    if (state < 0) {
      kept.vars.push_back(t.scope().vars[d]);
      kept.card.push_back(t.scope().card[d]);
    } else {
      if (state >= t.scope().card[d])
        throw Error(ErrorCode::internal, "state index out of range");
      base += ts[d] * static_cast<std::size_t>(state);
    }
  }
  if (kept == t.scope()) return t;
  std::vector<std::size_t> src = dim_strides_into(kept, t.scope());
  std::vector<std::size_t> dst(kept.vars.size());
  {
    std::size_t acc = 1;
    for (int d = static_cast<int>(kept.vars.size()) - 1; d >= 0; --d) {
      dst[d] = acc;
      acc *= static_cast<std::size_t>(kept.card[d]);
    }
  }
  Table out(kept);
  std::size_t id = 0, is = base;
  Walker w(kept);
  for (;;) {
    out.cell(id) = t[is];
    if (!w.next(&id, dst, &is, &src)) break;
  }
  return out;
}

Table expand(const Table& t, const Scope& target) {
  for (VariableId v : t.scope().vars)
    if (!target.contains(v))
      throw Error(ErrorCode::internal, "expand target must contain scope");
  std::vector<std::size_t> st = dim_strides_into(target, t.scope());
  Table out(target);
  std::size_t is = 0, id = 0;
  Walker w(target);
  for (;;) {
    out.cell(id++) = t[is];
    if (!w.next(&is, st)) break;
  }
  return out;
}

double sum_all(const Table& t) {
  double s = 0.0;
  for (double v : t.values()) s += v;
  return s;
}

std::pair<Table, double> normalize(const Table& t) {
  double s = sum_all(t);
  if (s <= 0.0)
    throw Error(ErrorCode::internal, "cannot normalize an all-zero table");
  Table out = t;
  for (std::size_t i = 0; i < out.cells(); ++i) out.cell(i) /= s;
  return {std::move(out), s};
}

}  // namespace cbn
