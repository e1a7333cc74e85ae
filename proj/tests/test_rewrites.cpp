#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <set>

#include "optimult/arrays.hpp"
#include "optimult/egraph.hpp"
#include "optimult/rewrites.hpp"

using namespace optimult;

namespace {

const Rewrite& find_rule(const std::vector<Rewrite>& rules, const std::string& name) {
  for (const auto& r : rules)
    if (r.name == name) return r;
  REQUIRE_MESSAGE(false, "missing rule ", name);
  std::abort();
}

TermPtr V(const char* name) { return mk_var(name, 0); }

}  // namespace

TEST_CASE("rule catalogue contents") {
  auto p1 = phase1_rules();
  auto p2 = phase2_rules();
  auto pre = prepass_rules(4);

  std::vector<std::string> p1_names;
  for (const auto& r : p1) p1_names.push_back(r.name);
  CHECK(p1_names == std::vector<std::string>{
                        "place-half-adder", "place-full-adder", "add-same", "row-add",
                        "sum-of-rows", "sum-of-bits", "row-of-rows", "carry-merge",
                        "carry-expand", "repeated-bit", "constant-merge", "sum-flatten",
                        "sum-sort", "add-comm", "add-assoc"});

  std::set<std::string> p2_names;
  for (const auto& r : p2) p2_names.insert(r.name);
  for (const char* required :
       {"half-adder-sum", "half-adder-carry", "full-adder-sum", "full-adder-carry",
        "sop-xor", "demorgan-and", "demorgan-or", "distrib-and-or", "distrib-and-xor",
        "xor-and", "or-not-and", "and-comm", "or-comm", "xor-comm", "and-assoc",
        "or-assoc", "xor-assoc", "and-idem", "or-idem", "not-not", "and-false",
        "and-true", "or-false", "or-true", "xor-false", "xor-true"})
    CHECK(p2_names.count(required) == 1);

  CHECK(pre.size() == 2);
  CHECK(pre[0].name == "divide-and-conquer");
  CHECK(pre[1].name == "shl-normalize");

  const auto& rb = find_rule(p1, "repeated-bit");
  CHECK(rb.soundness == Soundness::Modulo2W);
  for (const auto& r : p2) CHECK(r.soundness == Soundness::Exact);
}

TEST_CASE("every shipped rule passes the soundness check") {
  for (const auto& r : all_rules(4)) {
    auto v = soundness_check(r);
    INFO("rule ", r.name, ": ", v.counterexample);
    CHECK(v.pass);
    CHECK(v.cases_checked > 0);
  }
}

TEST_CASE("a corrupted full-adder carry is caught with a counterexample") {
  Rewrite bad;
  bad.name = "full-adder-carry-corrupt";
  bad.phase = Phase::Two;
  bad.lhs = Pattern::parse("(fac ?a ?b ?c)");
  bad.rhs = Pattern::parse("(and (and ?a ?b) (and ?c (xor ?a ?b)))");
  bad.lhs_text = bad.lhs->text();
  bad.rhs_text = bad.rhs->text();
  bad.root_kinds = {Kind::FAc};
  bad.seeds = [] { return std::vector<TermPtr>{mk_fac(V("a"), V("b"), V("c"))}; };

  auto v = soundness_check(bad);
  CHECK_FALSE(v.pass);
  CHECK(v.counterexample.find("full-adder-carry-corrupt") != std::string::npos);

  // a=1,b=0,c=1 is a genuine violation of the corrupted form
  Env env;
  env.set("a", 1, 1);
  env.set("b", 1, 0);
  env.set("c", 1, 1);
  auto good = mk_fac(V("a"), V("b"), V("c"));
  auto corrupt = mk_and(mk_and(V("a"), V("b")), mk_and(V("c"), mk_xor(V("a"), V("b"))));
  CHECK(eval(good, env) == 1);
  CHECK(eval(corrupt, env) == 0);
}

TEST_CASE("the printed general row-of-rows is unsound for inner length 3") {
  // row(rowA, rowB) -> row(a2, sum(row(a1 a0), row(b2 b1)), b0) only
  // preserves the valuation for inner length 2; length 3 fails at a2=1.
  Rewrite general;
  general.name = "row-of-rows-general";
  general.phase = Phase::One;
  general.root_kinds = {Kind::Row};
  general.dynamic = [](const EGraph& g, ClassId cls, const ENode& n,
                       std::vector<PendingUnion>& out) {
    if (n.children.size() != 2) return;
    std::vector<ENode> ra, rb;
    for (const ENode& m : g.eclass(g.find(n.children[0])).nodes)
      if (m.kind == Kind::Row) ra.push_back(m);
    for (const ENode& m : g.eclass(g.find(n.children[1])).nodes)
      if (m.kind == Kind::Row) rb.push_back(m);
    for (const ENode& a : ra)
      for (const ENode& b : rb) {
        if (a.children.size() < 2 || a.children.size() != b.children.size()) continue;
        std::vector<ClassId> av(a.children.begin(), a.children.end());
        std::vector<ClassId> bv(b.children.begin(), b.children.end());
        out.push_back({cls, [av, bv](EGraph& gg) {
          ENode inner_a;
          inner_a.kind = Kind::Row;
          inner_a.children.assign(av.begin() + 1, av.end());
          ENode inner_b;
          inner_b.kind = Kind::Row;
          inner_b.children.assign(bv.begin(), bv.end() - 1);
          ENode sum;
          sum.kind = Kind::Sum;
          sum.children = {gg.add(inner_a), gg.add(inner_b)};
          ENode row;
          row.kind = Kind::Row;
          row.children = {av.front(), gg.add(sum), bv.back()};
          return gg.add(row);
        }});
      }
  };
  general.seeds = [] {
    return std::vector<TermPtr>{
        mk_row({mk_row({V("a"), V("b"), V("c")}), mk_row({V("d"), V("e"), V("f")})}),
    };
  };
  auto v = soundness_check(general);
  CHECK_FALSE(v.pass);
  CHECK(v.counterexample.find("a0=1") != std::string::npos);
}

TEST_CASE("sum-of-rows produces the columnwise form on the 2-bit array") {
  EGraph g;
  g.output_width = 4;
  ClassId root = g.add_term(build_and_array({2, false}));
  g.rebuild();
  std::vector<Rewrite> only{find_rule(phase1_rules(), "sum-of-rows")};
  RunLimits limits;
  limits.max_iterations = 1;
  run(g, only, limits);

  ClassId expect = g.add_term(
      parse("(row (sum 0 (and p1 q1)) (sum (and p1 q0) (and p0 q1)) "
            "(sum (and p0 q0) 0))"));
  g.rebuild();
  CHECK(g.find(root) == g.find(expect));
}

TEST_CASE("add-same keeps the doubled bit one column up") {
  auto lhs = mk_add(mk_and(mk_var("p", 1), mk_var("p", 0)),
                    mk_and(mk_var("p", 1), mk_var("p", 0)));
  auto rhs = mk_row({mk_and(mk_var("p", 1), mk_var("p", 0)), mk_const(0)});
  for (uint64_t p = 0; p < 4; ++p) {
    Env env = Env::pq(2, true, p, 0);
    CHECK(eval(lhs, env) == eval(rhs, env));
    CHECK(eval(lhs, env) == 2 * ((p >> 1) & p & 1));
  }
}

TEST_CASE("repeated-bit residues agree modulo 2^k") {
  // row(a,a,a) vs sum(row(1,1,1), not a): 7a vs 8-a, equal mod 8
  auto lhs = mk_row({V("a"), V("a"), V("a")});
  auto rhs = mk_sum({mk_row({mk_const(1), mk_const(1), mk_const(1)}), mk_not(V("a"))});
  for (int a = 0; a <= 1; ++a) {
    Env env;
    env.set("a", 1, a);
    CHECK(eval(lhs, env) == static_cast<Wide>(7 * a));
    CHECK(eval(rhs, env) == static_cast<Wide>(8 - a));
    CHECK(eval(lhs, env) % 8 == eval(rhs, env) % 8);
  }
}

TEST_CASE("phase-2 gate identities") {
  auto a = V("a"), b = V("b"), c = V("c");
  auto fac_gate = mk_or(mk_and(a, b), mk_and(c, mk_xor(a, b)));
  for (uint64_t x = 0; x < 8; ++x) {
    Env env;
    env.set("a", 1, x & 1);
    env.set("b", 1, (x >> 1) & 1);
    env.set("c", 1, (x >> 2) & 1);
    CHECK(eval(mk_fac(a, b, c), env) == eval(fac_gate, env));
    if (x < 4) {
      CHECK(eval(mk_not(mk_and(a, b)), env) ==
            eval(mk_or(mk_not(a), mk_not(b)), env));
    }
  }
  Env env;
  env.set("a", 1, 1);
  env.set("b", 1, 1);
  CHECK(eval(mk_xor(V("a"), mk_and(V("a"), V("b"))), env) == 0);
  CHECK(eval(mk_and(V("a"), mk_not(V("b"))), env) == 0);
}

TEST_CASE("phase-2 rules eliminate compressors from random trees") {
  std::mt19937 rng(11);
  auto rules = phase2_rules();
  for (int trial = 0; trial < 8; ++trial) {
    // random compressor tree over four variables
    std::vector<TermPtr> pool{V("a"), V("b"), V("c"), V("d")};
    for (int step = 0; step < 3; ++step) {
      auto pick = [&] { return pool[rng() % pool.size()]; };
      switch (rng() % 4) {
        case 0: pool.push_back(mk_has(pick(), pick())); break;
        case 1: pool.push_back(mk_hac(pick(), pick())); break;
        case 2: pool.push_back(mk_fas(pick(), pick(), pick())); break;
        default: pool.push_back(mk_fac(pick(), pick(), pick())); break;
      }
    }
    TermPtr t = pool.back();
    EGraph g;
    ClassId root = g.add_term(t);
    RunLimits limits;
    limits.max_iterations = 12;
    limits.max_nodes = 50000;
    run(g, rules, limits);
    auto terms = realize_min_all(g);
    auto out = terms.at(g.find(root));
    std::function<bool(const TermPtr&)> pure = [&](const TermPtr& u) {
      if (u->kind == Kind::FAs || u->kind == Kind::FAc || u->kind == Kind::HAs ||
          u->kind == Kind::HAc)
        return false;
      for (const auto& ch : u->children)
        if (!pure(ch)) return false;
      return true;
    };
    CHECK(pure(out));
  }
}
