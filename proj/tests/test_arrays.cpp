#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "optimult/arrays.hpp"

using namespace optimult;

TEST_CASE("2-bit multiplier array layout") {
  auto t = build_and_array({2, false});
  CHECK(serialize(t) ==
        "(sum (row (and p1 q0) (and p0 q0)) (row (and p1 q1) (and p0 q1) 0))");
}

TEST_CASE("2-bit squarer array folds diagonals and canonicalizes pairs") {
  auto t = build_and_array({2, true});
  CHECK(serialize(t) == "(sum (row (and p1 p0) p0) (row p1 (and p1 p0) 0))");
}

TEST_CASE("array valuation equals the product, exhaustively") {
  for (uint32_t n = 2; n <= 8; ++n) {
    ArraySpec mult{n, false};
    auto tm = build_and_array(mult);
    uint64_t lim = 1ull << n;
    // full space up to width 4; sampled corners plus strides beyond
    uint64_t step = n <= 4 ? 1 : (n == 5 ? 1 : 3);
    for (uint64_t p = 0; p < lim; p += step)
      for (uint64_t q = 0; q < lim; q += step)
        CHECK(eval(tm, Env::pq(n, false, p, q)) == static_cast<Wide>(p) * q);

    ArraySpec sq{n, true};
    auto ts = build_and_array(sq);
    for (uint64_t p = 0; p < lim; ++p)
      CHECK(eval(ts, Env::pq(n, true, p, 0)) == static_cast<Wide>(p) * p);
  }
}

TEST_CASE("width below 2 is rejected") {
  CHECK_THROWS_AS(build_and_array({1, false}), std::invalid_argument);
  CHECK_THROWS_AS(build_and_array({0, true}), std::invalid_argument);
}

TEST_CASE("pad_rows left-pads with zeros and preserves value") {
  auto padded = pad_rows({mk_row({mk_var("p", 0)})}, 2);
  REQUIRE(padded.size() == 1);
  CHECK(serialize(padded[0]) == "(row 0 p0)");

  // the 2-bit array rows padded to length 3
  auto arr = build_and_array({2, false});
  auto rows = pad_rows({arr->children[0], arr->children[1]}, 3);
  CHECK(serialize(rows[0]) == "(row 0 (and p1 q0) (and p0 q0))");
  CHECK(serialize(rows[1]) == "(row (and p1 q1) (and p0 q1) 0)");

  std::mt19937 rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    size_t len = 1 + rng() % 5;
    std::vector<TermPtr> slots;
    for (size_t i = 0; i < len; ++i) slots.push_back(mk_const(rng() & 1));
    auto row = mk_row(slots);
    auto out = pad_rows({row}, len + rng() % 4);
    CHECK(eval(out[0], Env{}) == eval(row, Env{}));
  }

  CHECK_THROWS_AS(pad_rows({mk_row({mk_const(0), mk_const(1)})}, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(pad_rows({mk_const(0)}, 2), std::invalid_argument);
}
