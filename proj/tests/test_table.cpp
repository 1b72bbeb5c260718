#include <doctest.h>

#include <cmath>

#include "cbn/table.hpp"
#include "support.hpp"

using namespace cbn;
using namespace cbn::testing;

namespace {

Scope sc(std::vector<VariableId> vars, std::vector<int> card) {
  return Scope{std::move(vars), std::move(card)};
}

}  // namespace

TEST_SUITE("table") {

TEST_CASE("scalar multiplier is the identity") {
  Table a(sc({0}, {2}), {2.0, 3.0});
  Table r = multiply(a, Table::scalar(1.0));
  CHECK(r.scope() == a.scope());
  CHECK(r[0] == 2.0);
  CHECK(r[1] == 3.0);
}

TEST_CASE("disjoint multiply is the outer product, last id fastest") {
  Table a(sc({0}, {2}), {1.0, 2.0});
  Table b(sc({1}, {2}), {3.0, 4.0});
  Table r = multiply(a, b);
  REQUIRE(r.scope() == sc({0, 1}, {2, 2}));
  CHECK(r[0] == 3.0);
  CHECK(r[1] == 4.0);
  CHECK(r[2] == 6.0);
  CHECK(r[3] == 8.0);
}

TEST_CASE("overlapping multiply agrees with the nested-loop reference") {
  for (unsigned seed : {1u, 2u, 3u, 4u, 5u}) {
    Table a = random_table(sc({0, 2}, {2, 3}), seed);
    Table b = random_table(sc({2, 5}, {3, 2}), seed + 100);
    Table r = multiply(a, b);
    REQUIRE(r.scope() == sc({0, 2, 5}, {2, 3, 2}));
    for_each_state(r.scope(), [&](const FullState& s) {
      CHECK(ref_cell(r, s) ==
            doctest::Approx(ref_cell(a, s) * ref_cell(b, s)).epsilon(1e-14));
    });
  }
}

TEST_CASE("multiply rejects conflicting cardinalities") {
  Table a(sc({0}, {2}), {1.0, 2.0});
  Table b(sc({0}, {3}), {1.0, 2.0, 3.0});
  CHECK_THROWS_AS(multiply(a, b), Error);
}

TEST_CASE("marginalize keeps the full scope unchanged") {
  Table t = random_table(sc({1, 3}, {2, 2}), 7);
  Table r = marginalize(t, {1, 3});
  CHECK(tables_close(r, t, 0.0));
}

TEST_CASE("marginalize to nothing is the total") {
  Table t(sc({1, 3}, {2, 2}), {1.0, 2.0, 3.0, 4.0});
  Table r = marginalize(t, {});
  REQUIRE(r.is_scalar());
  CHECK(r[0] == 10.0);
}

TEST_CASE("marginalize sums the dropped variable") {
  Table t(sc({0, 1}, {2, 2}), {1.0, 2.0, 3.0, 4.0});
  Table r = marginalize(t, {0});
  REQUIRE(r.scope() == sc({0}, {2}));
  CHECK(r[0] == 3.0);
  CHECK(r[1] == 7.0);
}

TEST_CASE("marginalize ignores ids outside the scope") {
  Table t(sc({0, 1}, {2, 2}), {1.0, 2.0, 3.0, 4.0});
  Table r = marginalize(t, {0, 9});
  REQUIRE(r.scope() == sc({0}, {2}));
  CHECK(r[0] == 3.0);
}

TEST_CASE("divide by a scalar") {
  Table t(sc({0}, {2}), {2.0, 4.0});
  Table r = divide(t, Table::scalar(2.0));
  CHECK(r[0] == 1.0);
  CHECK(r[1] == 2.0);
}

TEST_CASE("zero over zero maps to zero") {
  Table num(sc({0}, {2}), {0.0, 4.0});
  Table den(sc({0}, {2}), {0.0, 2.0});
  Table r = divide(num, den);
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 2.0);
}

TEST_CASE("positive over zero is an error") {
  Table num(sc({0}, {2}), {1.0, 4.0});
  Table den(sc({0}, {2}), {0.0, 2.0});
  CHECK_THROWS_AS(divide(num, den), Error);
}

TEST_CASE("empty slice keeps the table") {
  Table t = random_table(sc({0, 1}, {2, 2}), 9);
  CHECK(tables_close(slice(t, {}), t, 0.0));
}

TEST_CASE("slice fixes a variable") {
  Table t(sc({0, 1}, {2, 2}), {1.0, 2.0, 3.0, 4.0});
  Table r = slice(t, {{1, 1}});
  REQUIRE(r.scope() == sc({0}, {2}));
  CHECK(r[0] == 2.0);
  CHECK(r[1] == 4.0);
}

TEST_CASE("slice rejects out-of-range states") {
  Table t(sc({0}, {2}), {1.0, 2.0});
  CHECK_THROWS_AS(slice(t, {{0, 2}}), Error);
}

TEST_CASE("slice and marginalize commute on disjoint variables") {
  for (unsigned seed : {11u, 12u, 13u}) {
    Table t = random_table(sc({0, 1, 2, 3}, {2, 3, 2, 2}), seed);
    // fix variable 3, sum out variable 1
    Table a = marginalize(slice(t, {{3, 1}}), {0, 2});
    Table b = slice(marginalize(t, {0, 2, 3}), {{3, 1}});
    CHECK(tables_close(a, b, 1e-12));
    for_each_state(a.scope(), [&](const FullState& s) {
      double direct = 0.0;
      for (int x1 = 0; x1 < 3; ++x1) {
        FullState full = s;
        full[1] = x1;
        full[3] = 1;
        direct += ref_cell(t, full);
      }
      CHECK(ref_cell(a, s) == doctest::Approx(direct).epsilon(1e-12));
    });
  }
}

TEST_CASE("normalize reports the total") {
  Table t(sc({0}, {2}), {1.0, 3.0});
  auto [n, total] = normalize(t);
  CHECK(total == 4.0);
  CHECK(n[0] == doctest::Approx(0.25));
  CHECK(n[1] == doctest::Approx(0.75));
}

TEST_CASE("normalize of scalar one") {
  auto [n, total] = normalize(Table::scalar(1.0));
  CHECK(total == 1.0);
  CHECK(n[0] == 1.0);
}

TEST_CASE("normalize rejects an all-zero table") {
  Table t(sc({0}, {2}), {0.0, 0.0});
  CHECK_THROWS_AS(normalize(t), Error);
}

TEST_CASE("expand replicates over new variables") {
  Table t(sc({1}, {2}), {5.0, 7.0});
  Table r = expand(t, sc({0, 1}, {2, 2}));
  for_each_state(r.scope(), [&](const FullState& s) {
    CHECK(ref_cell(r, s) == ref_cell(t, s));
  });
}

TEST_CASE("multiply is commutative and associative on random tables") {
  for (unsigned seed : {21u, 22u, 23u, 24u}) {
    Table a = random_table(sc({0, 1}, {2, 2}), seed);
    Table b = random_table(sc({1, 2}, {2, 3}), seed + 50);
    Table c = random_table(sc({0, 2}, {2, 3}), seed + 99);
    CHECK(tables_close(multiply(a, b), multiply(b, a), 1e-12));
    CHECK(tables_close(multiply(multiply(a, b), c), multiply(a, multiply(b, c)),
                       1e-12));
  }
}

TEST_CASE("marginalizing a product distributes over disjoint scopes") {
  // sum_{y} a(x) b(x, y) = a(x) sum_{y} b(x, y)
  for (unsigned seed : {31u, 32u, 33u}) {
    Table a = random_table(sc({0, 1}, {2, 2}), seed);
    Table b = random_table(sc({1, 2, 3}, {2, 2, 3}), seed + 7);
    Table lhs = marginalize(multiply(a, b), {0, 1});
    Table rhs = multiply(a, marginalize(b, {1}));
    CHECK(tables_close(lhs, rhs, 1e-12));
  }
}

TEST_CASE("division undoes multiplication where the divisor is positive") {
  for (unsigned seed : {41u, 42u}) {
    Table a = random_table(sc({0, 1}, {2, 2}), seed);
    Table b = random_table(sc({1, 2}, {2, 2}), seed + 5, 0.1, 1.0);
    Table prod = multiply(a, b);
    Table back = divide(prod, b);
    for_each_state(prod.scope(), [&](const FullState& s) {
      CHECK(ref_cell(back, s) == doctest::Approx(ref_cell(a, s)).epsilon(1e-12));
    });
  }
}

TEST_CASE("marginalization preserves the total") {
  for (unsigned seed : {51u, 52u}) {
    Table t = random_table(sc({0, 1, 2}, {2, 3, 2}), seed);
    double total = sum_all(t);
    CHECK(sum_all(marginalize(t, {1})) == doctest::Approx(total).epsilon(1e-12));
    CHECK(sum_all(marginalize(t, {})) == doctest::Approx(total).epsilon(1e-12));
  }
}

TEST_CASE("payload accounting tracks live tables") {
  std::size_t before = Table::live_bytes();
  {
    Table t(sc({0, 1}, {2, 2}));
    CHECK(Table::live_bytes() == before + 4 * sizeof(double));
    Table moved = std::move(t);
    CHECK(Table::live_bytes() == before + 4 * sizeof(double));
  }
  CHECK(Table::live_bytes() == before);
}

TEST_CASE("from_ordered reorders declared layouts into canonical form") {
  // Values over (1, 0) with 0 fastest must land at canonical (0, 1) slots.
  Table t = Table::from_ordered({1, 0}, {2, 2}, {10.0, 20.0, 30.0, 40.0});
  REQUIRE(t.scope() == sc({0, 1}, {2, 2}));
  // given order: (x1=0,x0=0)=10, (x1=0,x0=1)=20, (x1=1,x0=0)=30, (x1=1,x0=1)=40
  CHECK(ref_cell(t, {{0, 0}, {1, 0}}) == 10.0);
  CHECK(ref_cell(t, {{0, 1}, {1, 0}}) == 20.0);
  CHECK(ref_cell(t, {{0, 0}, {1, 1}}) == 30.0);
  CHECK(ref_cell(t, {{0, 1}, {1, 1}}) == 40.0);
}

}  // TEST_SUITE
