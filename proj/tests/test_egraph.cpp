#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>
#include <unordered_set>

#include "optimult/arrays.hpp"
#include "optimult/egraph.hpp"
#include "optimult/rewrites.hpp"

using namespace optimult;

namespace {

// Distinct subterms of a tree, counted structurally.
size_t distinct_subterms(const TermPtr& t) {
  std::set<std::string> seen;
  std::function<void(const TermPtr&)> walk = [&](const TermPtr& u) {
    if (!seen.insert(serialize(u)).second) return;
    for (const auto& c : u->children) walk(c);
  };
  walk(t);
  return seen.size();
}

ENode var_node(EGraph& g, const char* name, uint32_t idx) {
  ENode n;
  n.kind = Kind::Var;
  n.a = g.symbol(name);
  n.b = idx;
  return n;
}

}  // namespace

TEST_CASE("add is idempotent") {
  EGraph g;
  ClassId a = g.add(var_node(g, "p", 0));
  ClassId b = g.add(var_node(g, "p", 1));
  ENode n;
  n.kind = Kind::And;
  n.children = {a, b};
  ClassId c1 = g.add(n);
  ClassId c2 = g.add(n);
  CHECK(c1 == c2);
  CHECK(g.node_count() == 3);
}

TEST_CASE("congruence closes over unions after rebuild") {
  EGraph g;
  ClassId a = g.add(var_node(g, "p", 0));
  ClassId b = g.add(var_node(g, "p", 1));
  ClassId c = g.add(var_node(g, "p", 2));
  ENode ab;
  ab.kind = Kind::And;
  ab.children = {a, b};
  ENode cb;
  cb.kind = Kind::And;
  cb.children = {c, b};
  ClassId x = g.add(ab);
  ClassId y = g.add(cb);
  CHECK(g.find(x) != g.find(y));
  CHECK(g.merge(a, c));
  g.rebuild();
  CHECK(g.find(x) == g.find(y));
  CHECK(g.find(a) == g.find(c));
  CHECK(g.find(a) != g.find(b));
}

TEST_CASE("inserting the array yields one node per distinct subterm") {
  auto arr = build_and_array({2, false});
  EGraph g;
  g.add_term(arr);
  CHECK(g.node_count() == distinct_subterms(arr));
  CHECK(g.distinct_nodes() == g.node_count());
}

TEST_CASE("ematch binds holes consistently") {
  EGraph g;
  ClassId x = g.add(var_node(g, "p", 0));
  ClassId y = g.add(var_node(g, "p", 1));
  ENode xx;
  xx.kind = Kind::Add;
  xx.children = {x, x};
  ENode xy;
  xy.kind = Kind::Add;
  xy.children = {x, y};
  ClassId same = g.add(xx);
  g.add(xy);
  g.rebuild();

  auto pat = Pattern::parse("(add ?a ?a)");
  auto hits = ematch_all(g, pat, 100);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].first == g.find(same));
  CHECK(g.find(hits[0].second.bind.at("a")) == g.find(x));
}

TEST_CASE("ematch with rest binders captures whole rows") {
  EGraph g;
  g.add_term(build_and_array({2, false}));
  g.rebuild();
  auto pat = Pattern::parse("(sum (row ?a...) (row ?b...))");
  auto hits = ematch_all(g, pat, 100);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].second.rest.at("a").size() == 2);
  CHECK(hits[0].second.rest.at("b").size() == 3);

  EGraph empty;
  CHECK(ematch_all(empty, pat, 100).empty());
}

TEST_CASE("initial mapping grows the root class to three representations") {
  // Seed the product node and its AND array in one class, then saturate
  // the phase-1 rules: the root gains the columnwise row form as well.
  EGraph g;
  g.output_width = 4;
  ClassId mul = g.add_term(
      mk_mul(mk_row({mk_var("p", 1), mk_var("p", 0)}),
             mk_row({mk_var("q", 1), mk_var("q", 0)})));
  ClassId arr = g.add_term(build_and_array({2, false}));
  g.merge(mul, arr);
  g.rebuild();

  RunLimits limits;
  limits.max_iterations = 4;
  run(g, phase1_rules(), limits);

  std::set<Kind> kinds;
  for (const ENode& n : g.eclass(g.find(mul)).nodes) kinds.insert(n.kind);
  CHECK(kinds.count(Kind::Mul) == 1);
  CHECK(kinds.count(Kind::Sum) == 1);
  CHECK(kinds.count(Kind::Row) == 1);
}

TEST_CASE("zero iteration budget stops immediately") {
  EGraph g;
  g.add_term(build_and_array({2, false}));
  size_t before = g.node_count();
  RunLimits limits;
  limits.max_iterations = 0;
  RunStats stats;
  CHECK(run(g, phase1_rules(), limits, &stats) == StopReason::IterationLimit);
  CHECK(stats.iterations == 0);
  CHECK(g.node_count() == before);
}

TEST_CASE("commutativity saturates to a two-node class") {
  EGraph g;
  ClassId root = g.add_term(mk_and(mk_var("p", 0), mk_var("q", 0)));
  std::vector<Rewrite> comm;
  for (auto& r : phase2_rules())
    if (r.name == "and-comm") comm.push_back(std::move(r));
  REQUIRE(comm.size() == 1);
  RunLimits limits;
  CHECK(run(g, comm, limits) == StopReason::Saturated);
  CHECK(g.eclass(g.find(root)).nodes.size() == 2);
}

TEST_CASE("node count grows monotonically during runs") {
  EGraph g;
  g.output_width = 6;
  g.add_term(build_and_array({3, true}));
  size_t last = g.node_count();
  auto rules = phase1_rules();
  for (int step = 0; step < 6; ++step) {
    RunLimits one;
    one.max_iterations = 1;
    run(g, rules, one);
    CHECK(g.node_count() >= last);
    last = g.node_count();
  }
}

TEST_CASE("rebuild is idempotent") {
  EGraph g;
  ClassId a = g.add_term(mk_var("p", 0));
  ClassId b = g.add_term(mk_var("q", 0));
  g.add_term(mk_and(mk_var("p", 0), mk_var("q", 0)));
  g.add_term(mk_and(mk_var("q", 0), mk_var("q", 0)));
  g.merge(a, b);
  g.rebuild();
  auto snapshot = g.dump_json();
  g.rebuild();
  CHECK(g.dump_json() == snapshot);
}

TEST_CASE("node limit trips") {
  EGraph g;
  g.output_width = 8;
  g.add_term(build_and_array({4, false}));
  RunLimits limits;
  limits.max_nodes = 60;
  CHECK(run(g, phase1_rules(), limits) == StopReason::NodeLimit);
}

TEST_CASE("minimal realization picks the smallest member") {
  EGraph g;
  ClassId x = g.add_term(mk_and(mk_var("p", 0), mk_var("p", 1)));
  ClassId y = g.add_term(
      mk_and(mk_and(mk_var("p", 0), mk_var("p", 0)), mk_var("p", 1)));
  g.merge(x, y);
  g.rebuild();
  auto terms = realize_min_all(g);
  CHECK(serialize(terms.at(g.find(x))) == "(and p0 p1)");
}
