#include "optimult/rewrites.hpp"

#include <algorithm>
#include <cassert>

namespace optimult {

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Pre: return "pre";
    case Phase::One: return "1";
    case Phase::Two: return "2";
  }
  return "?";
}

const char* soundness_name(Soundness s) {
  return s == Soundness::Exact ? "exact" : "modulo-2^W";
}

namespace {

TermPtr V(const char* name) { return mk_var(name, 0); }

// LHS pattern instantiated over fresh single-bit variables, one per hole.
TermPtr auto_seed(const Pattern& p) {
  if (p.op == Pattern::Op::Hole) return mk_var(p.hole, 0);
  std::vector<TermPtr> children;
  children.reserve(p.children.size());
  for (const Pattern& c : p.children) children.push_back(auto_seed(c));
  return mk_node(p.kind, std::move(children), p.a);
}

bool all_bound_bits(const EGraph& g, const Subst& s) {
  for (const auto& [name, cls] : s.bind)
    if (!g.class_is_bit(cls)) return false;
  return true;
}

Rewrite static_rule(std::string name, Phase phase, const char* lhs, const char* rhs,
                    std::function<bool(const EGraph&, const Subst&)> guard = nullptr) {
  Rewrite r;
  r.name = std::move(name);
  r.phase = phase;
  r.lhs = Pattern::parse(lhs);
  r.rhs = Pattern::parse(rhs);
  r.lhs_text = r.lhs->text();
  r.rhs_text = r.rhs->text();
  r.guard = std::move(guard);
  if (r.lhs->op == Pattern::Op::Node) r.root_kinds = {r.lhs->kind};
  Pattern seed_pat = *r.lhs;
  r.seeds = [seed_pat] { return std::vector<TermPtr>{auto_seed(seed_pat)}; };
  return r;
}

// Row nodes of a class, in stored (sorted) order, capped. Pointers stay
// valid while the graph is frozen (match stage).
std::vector<const ENode*> row_nodes(const EGraph& g, ClassId cls, size_t cap = 4) {
  std::vector<const ENode*> out;
  for (const ENode& n : g.eclass(cls).nodes) {
    if (n.kind != Kind::Row) continue;
    out.push_back(&n);
    if (out.size() >= cap) break;
  }
  return out;
}

ClassId add_const(EGraph& g, uint32_t v) {
  ENode n;
  n.kind = Kind::Const;
  n.a = v;
  return g.add(std::move(n));
}

ClassId add_node(EGraph& g, Kind k, std::vector<ClassId> children, uint32_t a = 0) {
  ENode n;
  n.kind = k;
  n.a = a;
  n.children = std::move(children);
  return g.add(std::move(n));
}

// ---------------------------------------------------------------- phase 1

Rewrite rule_row_add() {
  Rewrite r;
  r.name = "row-add";
  r.phase = Phase::One;
  r.lhs_text = "(add ?a (row ?b...))";
  r.rhs_text = "(row ?b_head... (add ?a ?b_last))";
  r.root_kinds = {Kind::Add};
  r.dynamic = [](const EGraph& g, ClassId cls, const ENode& n,
                 std::vector<PendingUnion>& out) {
    for (int side = 0; side < 2; ++side) {
      ClassId a = g.find(n.children[side]);
      if (!g.class_is_bit(a)) continue;
      ClassId rows_cls = g.find(n.children[1 - side]);
      for (const ENode* row : row_nodes(g, rows_cls, 2)) {
        std::vector<ClassId> slots(row->children.begin(), row->children.end());
        out.push_back({cls, [a, slots](EGraph& gg) {
                         std::vector<ClassId> next(slots.begin(), slots.end() - 1);
                         next.push_back(add_node(gg, Kind::Add, {a, slots.back()}));
                         return add_node(gg, Kind::Row, std::move(next));
                       }});
      }
    }
  };
  r.seeds = [] {
    return std::vector<TermPtr>{
        mk_add(V("c"), mk_row({V("a")})),
        mk_add(V("c"), mk_row({V("a"), V("b")})),
        mk_add(mk_row({V("a"), V("b"), V("d")}), V("c")),
    };
  };
  return r;
}

Rewrite rule_sum_of_rows() {
  Rewrite r;
  r.name = "sum-of-rows";
  r.phase = Phase::One;
  r.lhs_text = "(sum (row ?a...) (row ?b...) ...)";
  r.rhs_text = "(row (sum ?a_i ?b_i ...) per column, zero-padded)";
  r.root_kinds = {Kind::Sum, Kind::Add};  // a binary add of rows is a 2-operand sum
  r.dynamic = [](const EGraph& g, ClassId cls, const ENode& n,
                 std::vector<PendingUnion>& out) {
    std::vector<std::vector<const ENode*>> options;
    options.reserve(n.children.size());
    for (ClassId c : n.children) {
      options.push_back(row_nodes(g, g.find(c), 2));
      if (options.back().empty()) return;
    }
    // Enumerate the first few row-choice combinations in mixed-radix order.
    size_t combos = 1;
    for (const auto& o : options) combos *= o.size();
    combos = std::min<size_t>(combos, 2);
    for (size_t ix = 0; ix < combos; ++ix) {
      std::vector<std::vector<ClassId>> rows;
      size_t rem = ix;
      for (const auto& o : options) {
        const ENode* pick = o[rem % o.size()];
        rem /= o.size();
        rows.emplace_back(pick->children.begin(), pick->children.end());
      }
      out.push_back({cls, [rows](EGraph& gg) {
                       size_t len = 0;
                       for (const auto& row : rows) len = std::max(len, row.size());
                       ClassId zero = add_const(gg, 0);
                       std::vector<ClassId> cols;
                       cols.reserve(len);
                       for (size_t j = 0; j < len; ++j) {  // MSB-first
                         std::vector<ClassId> entries;
                         entries.reserve(rows.size());
                         for (const auto& row : rows) {
                           size_t pad = len - row.size();
                           entries.push_back(j < pad ? zero : row[j - pad]);
                         }
                         cols.push_back(add_node(gg, Kind::Sum, std::move(entries)));
                       }
                       return add_node(gg, Kind::Row, std::move(cols));
                     }});
    }
  };
  r.seeds = [] {
    return std::vector<TermPtr>{
        mk_sum({mk_row({V("a"), V("b")}), mk_row({V("c"), V("d")})}),
        mk_sum({mk_row({V("a"), V("b"), V("c")}), mk_row({V("d"), V("e")})}),
        mk_sum({mk_row({V("a")}), mk_row({V("b")}), mk_row({V("c")})}),
        mk_sum({mk_row({V("a"), V("b")}), mk_row({V("c"), V("d"), V("e")}),
                mk_row({V("f")})}),
    };
  };
  return r;
}

Rewrite rule_sum_of_bits() {
  Rewrite r;
  r.name = "sum-of-bits";
  r.phase = Phase::One;
  r.lhs_text = "(sum ?a ?b ?c ...) all single-bit";
  r.rhs_text = "(add (add ?a ?b) ?c ...)";
  r.root_kinds = {Kind::Sum};
  r.dynamic = [](const EGraph& g, ClassId cls, const ENode& n,
                 std::vector<PendingUnion>& out) {
    for (ClassId c : n.children)
      if (!g.class_is_bit(g.find(c))) return;
    std::vector<ClassId> operands(n.children.begin(), n.children.end());
    out.push_back({cls, [operands](EGraph& gg) {
                     ClassId acc = operands[0];
                     for (size_t i = 1; i < operands.size(); ++i)
                       acc = add_node(gg, Kind::Add, {acc, operands[i]});
                     return acc;
                   }});
  };
  r.seeds = [] {
    return std::vector<TermPtr>{
        mk_sum({V("a"), V("b")}),
        mk_sum({V("a"), V("b"), V("c")}),
        mk_sum({V("a"), V("b"), V("c"), V("d")}),
    };
  };
  return r;
}

Rewrite rule_row_of_rows() {
  Rewrite r;
  r.name = "row-of-rows";
  r.phase = Phase::One;
  r.lhs_text = "(row (row ?a1 ?a0) (row ?b1 ?b0))";
  r.rhs_text = "(row ?a1 (sum (row ?a0) (row ?b1)) ?b0)";
  r.root_kinds = {Kind::Row};
  r.dynamic = [](const EGraph& g, ClassId cls, const ENode& n,
                 std::vector<PendingUnion>& out) {
    if (n.children.size() != 2) return;
    for (const ENode* ra : row_nodes(g, g.find(n.children[0]), 2)) {
      if (ra->children.size() != 2) continue;
      for (const ENode* rb : row_nodes(g, g.find(n.children[1]), 2)) {
        if (rb->children.size() != 2) continue;
        ClassId a1 = ra->children[0], a0 = ra->children[1];
        ClassId b1 = rb->children[0], b0 = rb->children[1];
        out.push_back({cls, [a1, a0, b1, b0](EGraph& gg) {
                         ClassId ra0 = add_node(gg, Kind::Row, {a0});
                         ClassId rb1 = add_node(gg, Kind::Row, {b1});
                         ClassId mid = add_node(gg, Kind::Sum, {ra0, rb1});
                         return add_node(gg, Kind::Row, {a1, mid, b0});
                       }});
      }
    }
  };
  r.seeds = [] {
    return std::vector<TermPtr>{
        mk_row({mk_row({V("a"), V("b")}), mk_row({V("c"), V("d")})}),
    };
  };
  return r;
}

Rewrite rule_carry_merge() {
  Rewrite r;
  r.name = "carry-merge";
  r.phase = Phase::One;
  r.lhs_text = "(row ... ?e (row ?c ?s) ...)";
  r.rhs_text = "(row ... (add ?e ?c) ?s ...)";
  r.root_kinds = {Kind::Row};
  r.dynamic = [](const EGraph& g, ClassId cls, const ENode& n,
                 std::vector<PendingUnion>& out) {
    // Merge every slot holding a two-slot row in one step; each single-slot
    // merge is value-preserving, and composing them keeps the class count
    // linear instead of enumerating every interleaving.
    struct Hit {
      size_t k;
      ClassId carry, sum;
    };
    std::vector<Hit> hits;
    for (size_t k = 1; k < n.children.size(); ++k) {
      for (const ENode* inner : row_nodes(g, g.find(n.children[k]), 4)) {
        if (inner->children.size() != 2) continue;
        hits.push_back({k, g.find(inner->children[0]), g.find(inner->children[1])});
        break;
      }
    }
    if (hits.empty()) return;
    std::vector<ClassId> slots(n.children.begin(), n.children.end());
    out.push_back({cls, [slots, hits](EGraph& gg) {
                     std::vector<ClassId> next = slots;
                     for (const Hit& h : hits) {  // ascending k composes left-to-right
                       next[h.k - 1] = add_node(gg, Kind::Add, {next[h.k - 1], h.carry});
                       next[h.k] = h.sum;
                     }
                     return add_node(gg, Kind::Row, std::move(next));
                   }});
  };
  r.seeds = [] {
    return std::vector<TermPtr>{
        mk_row({V("e"), mk_row({V("c"), V("s")})}),
        mk_row({V("e"), mk_row({V("c"), V("s")}), V("f")}),
        mk_row({V("e"), V("f"), mk_row({V("c"), V("s")})}),
        mk_row({V("e"), mk_row({V("a"), V("b")}), mk_row({V("c"), V("s")})}),
        mk_row({mk_row({V("a"), V("b")}), mk_row({V("c"), V("s")}), V("f")}),
    };
  };
  return r;
}

Rewrite rule_carry_expand() {
  Rewrite r;
  r.name = "carry-expand";
  r.phase = Phase::One;
  r.lhs_text = "(row (row ?c ?s) ...)";
  r.rhs_text = "(row ?c ?s ...)";
  r.root_kinds = {Kind::Row};
  r.dynamic = [](const EGraph& g, ClassId cls, const ENode& n,
                 std::vector<PendingUnion>& out) {
    // Rows beyond output width + 1 carry no extractable value; don't grow them.
    if (g.output_width > 0 && n.children.size() > g.output_width) return;
    for (const ENode* inner : row_nodes(g, g.find(n.children[0]), 4)) {
      if (inner->children.size() != 2) continue;
      std::vector<ClassId> slots(n.children.begin(), n.children.end());
      ClassId carry = inner->children[0], sum = inner->children[1];
      out.push_back({cls, [slots, carry, sum](EGraph& gg) {
                       std::vector<ClassId> next{carry, sum};
                       next.insert(next.end(), slots.begin() + 1, slots.end());
                       return add_node(gg, Kind::Row, std::move(next));
                     }});
      break;
    }
  };
  r.seeds = [] {
    return std::vector<TermPtr>{
        mk_row({mk_row({V("c"), V("s")})}),
        mk_row({mk_row({V("c"), V("s")}), V("e"), V("f")}),
    };
  };
  return r;
}

Rewrite rule_repeated_bit() {
  Rewrite r;
  r.name = "repeated-bit";
  r.phase = Phase::One;
  r.soundness = Soundness::Modulo2W;
  r.lhs_text = "(row ?a ?a ... ?a ?tail...) full output width";
  r.rhs_text = "(sum (row 1 ... 1 ?tail...) (row (not ?a) 0...))";
  r.root_kinds = {Kind::Row};
  r.dynamic = [](const EGraph& g, ClassId cls, const ENode& n,
                 std::vector<PendingUnion>& out) {
    // MSB-anchored: only rows spanning the whole output keep the dropped
    // multiple of 2^k congruent modulo 2^W.
    if (g.output_width == 0 || n.children.size() != g.output_width) return;
    ClassId rep = g.find(n.children[0]);
    if (!g.class_is_bit(rep)) return;
    size_t k = 1;
    while (k < n.children.size() && g.find(n.children[k]) == rep) ++k;
    if (k < 2) return;
    std::vector<ClassId> slots(n.children.begin(), n.children.end());
    out.push_back({cls,
                   [slots, k, rep](EGraph& gg) {
                     ClassId one = add_const(gg, 1);
                     ClassId zero = add_const(gg, 0);
                     std::vector<ClassId> ones(slots.begin(), slots.end());
                     for (size_t i = 0; i < k; ++i) ones[i] = one;
                     ClassId ones_row = add_node(gg, Kind::Row, std::move(ones));
                     ClassId nrep = add_node(gg, Kind::Not, {rep});
                     ClassId correction;
                     if (slots.size() == k) {
                       correction = nrep;
                     } else {
                       std::vector<ClassId> corr{nrep};
                       corr.insert(corr.end(), slots.size() - k, zero);
                       correction = add_node(gg, Kind::Row, std::move(corr));
                     }
                     return add_node(gg, Kind::Sum, {ones_row, correction});
                   },
                   /*mod2w=*/true});
  };
  r.seeds = [] {
    return std::vector<TermPtr>{
        mk_row({V("a"), V("a")}),
        mk_row({V("a"), V("a"), V("a")}),
        mk_row({V("a"), V("a"), V("b"), V("c")}),
        mk_row({V("a"), V("a"), V("a"), V("b")}),
    };
  };
  return r;
}

// Folds constant operands of sum/add and of the compressor cells; the
// constant rows emitted by repeated-bit dissolve into their columns here.
Rewrite rule_constant_merge() {
  Rewrite r;
  r.name = "constant-merge";
  r.phase = Phase::One;
  r.lhs_text = "(sum|add|fas|fac|has|hac ... const ...)";
  r.rhs_text = "constant-folded equivalent";
  r.root_kinds = {Kind::Sum, Kind::Add, Kind::FAs, Kind::FAc, Kind::HAs, Kind::HAc};
  r.dynamic = [](const EGraph& g, ClassId cls, const ENode& n,
                 std::vector<PendingUnion>& out) {
    // Split children into constants and the rest.
    uint32_t const_sum = 0;
    size_t const_count = 0, zero_count = 0;
    std::vector<ClassId> vars;     // non-constant operands
    std::vector<ClassId> nonzero;  // everything except constant 0
    for (ClassId c : n.children) {
      c = g.find(c);
      std::optional<uint32_t> cv;
      for (const ENode& m : g.eclass(c).nodes)
        if (m.kind == Kind::Const) {
          cv = m.a;
          break;
        }
      if (cv) {
        const_sum += *cv;
        ++const_count;
        if (*cv == 0) ++zero_count;
        else nonzero.push_back(c);
      } else {
        vars.push_back(c);
        nonzero.push_back(c);
      }
    }
    Kind kind = n.kind;
    if (kind == Kind::Sum || kind == Kind::Add) {
      if (zero_count == 0) return;  // only zero operands fold away
      if (nonzero.empty()) {
        out.push_back({cls, [](EGraph& gg) { return add_const(gg, 0); }});
      } else if (nonzero.size() == 1) {
        ClassId v = nonzero[0];
        out.push_back({cls, [v](EGraph&) { return v; }});
      } else {
        out.push_back({cls, [nonzero](EGraph& gg) {
                         return add_node(gg, Kind::Sum, std::vector<ClassId>(nonzero));
                       }});
      }
      return;
    }
    if (const_count == 0) return;
    // Compressor cells: arithmetic over (constant part, remaining bits).
    uint32_t s = const_sum;
    out.push_back({cls, [kind, s, vars](EGraph& gg) -> ClassId {
      bool carry = kind == Kind::FAc || kind == Kind::HAc;
      if (vars.empty()) return add_const(gg, carry ? s / 2 : s % 2);
      if (vars.size() == 1) {
        ClassId x = vars[0];
        if (!carry) return s % 2 ? add_node(gg, Kind::Not, {x}) : x;
        // carry of x + s
        if (s == 0) return add_const(gg, 0);
        if (s == 1) return x;
        return add_const(gg, 1);  // s == 2: (x+2)/2 = 1
      }
      // two remaining bits
      ClassId x = vars[0], y = vars[1];
      if (!carry)
        return s % 2 ? add_node(gg, Kind::Not, {add_node(gg, Kind::HAs, {x, y})})
                     : add_node(gg, Kind::HAs, {x, y});
      return s ? add_node(gg, Kind::Or, {x, y}) : add_node(gg, Kind::HAc, {x, y});
    }});
  };
  r.seeds = [] {
    return std::vector<TermPtr>{
        mk_sum({V("a"), mk_const(0)}),
        mk_sum({mk_const(0), V("a"), V("b")}),
        mk_sum({mk_const(0), mk_const(0)}),
        mk_add(V("a"), mk_const(0)),
        mk_add(mk_const(0), V("a")),
        mk_has(V("a"), mk_const(0)),
        mk_has(V("a"), mk_const(1)),
        mk_hac(V("a"), mk_const(0)),
        mk_hac(V("a"), mk_const(1)),
        mk_fas(V("a"), V("b"), mk_const(0)),
        mk_fas(V("a"), V("b"), mk_const(1)),
        mk_fac(V("a"), V("b"), mk_const(0)),
        mk_fac(V("a"), V("b"), mk_const(1)),
        mk_fas(V("a"), mk_const(0), mk_const(1)),
        mk_fac(V("a"), mk_const(1), mk_const(1)),
        mk_has(mk_const(0), mk_const(1)),
    };
  };
  return r;
}

Rewrite rule_sum_flatten() {
  Rewrite r;
  r.name = "sum-flatten";
  r.phase = Phase::One;
  r.lhs_text = "(sum ... (sum ?a...) ...)";
  r.rhs_text = "(sum ... ?a... ...)";
  r.root_kinds = {Kind::Sum};
  r.dynamic = [](const EGraph& g, ClassId cls, const ENode& n,
                 std::vector<PendingUnion>& out) {
    bool any = false;
    std::vector<std::vector<ClassId>> pieces;
    for (ClassId c : n.children) {
      c = g.find(c);
      const ENode* sub = nullptr;
      for (const ENode& m : g.eclass(c).nodes)
        if (m.kind == Kind::Sum) {
          sub = &m;
          break;
        }
      if (sub) {
        any = true;
        pieces.emplace_back(sub->children.begin(), sub->children.end());
      } else {
        pieces.push_back({c});
      }
    }
    if (!any) return;
    std::vector<ClassId> flat;
    for (const auto& p : pieces) flat.insert(flat.end(), p.begin(), p.end());
    out.push_back({cls, [flat](EGraph& gg) {
                     return add_node(gg, Kind::Sum, std::vector<ClassId>(flat));
                   }});
  };
  r.seeds = [] {
    return std::vector<TermPtr>{
        mk_sum({mk_sum({V("a"), V("b")}), V("c")}),
        mk_sum({V("a"), mk_sum({V("b"), V("c")}), V("d")}),
    };
  };
  return r;
}

Rewrite rule_sum_sort() {
  Rewrite r;
  r.name = "sum-sort";
  r.phase = Phase::One;
  r.lhs_text = "(sum ?unsorted...)";
  r.rhs_text = "(sum ?sorted...)";
  r.root_kinds = {Kind::Sum};
  r.dynamic = [](const EGraph& g, ClassId cls, const ENode& n,
                 std::vector<PendingUnion>& out) {
    std::vector<ClassId> sorted;
    sorted.reserve(n.children.size());
    for (ClassId c : n.children) sorted.push_back(g.find(c));
    std::sort(sorted.begin(), sorted.end());
    if (std::equal(sorted.begin(), sorted.end(), n.children.begin())) return;
    out.push_back({cls, [sorted](EGraph& gg) {
                     return add_node(gg, Kind::Sum, std::vector<ClassId>(sorted));
                   }});
  };
  r.seeds = [] {
    return std::vector<TermPtr>{
        mk_sum({mk_and(V("a"), V("b")), V("a"), V("b")}),
        mk_sum({V("c"), mk_and(V("a"), V("b")), V("a")}),
    };
  };
  return r;
}

// ---------------------------------------------------------------- pre-pass

Rewrite rule_divide_and_conquer() {
  Rewrite r;
  r.name = "divide-and-conquer";
  r.phase = Phase::Pre;
  r.lhs_text = "(mul (row ?a...) (row ?b...)) even length";
  r.rhs_text = "(sum (shl<n> (mul ?aH ?bH)) (shl<n/2> (mul ?aH ?bL)) "
               "(shl<n/2> (mul ?aL ?bH)) (mul ?aL ?bL))";
  r.root_kinds = {Kind::Mul};
  r.dynamic = [](const EGraph& g, ClassId cls, const ENode& n,
                 std::vector<PendingUnion>& out) {
    for (const ENode* ra : row_nodes(g, g.find(n.children[0]), 2)) {
      if (ra->children.size() % 2 || ra->children.size() < 2) continue;
      for (const ENode* rb : row_nodes(g, g.find(n.children[1]), 2)) {
        if (rb->children.size() != ra->children.size()) continue;
        std::vector<ClassId> a(ra->children.begin(), ra->children.end());
        std::vector<ClassId> b(rb->children.begin(), rb->children.end());
        out.push_back({cls, [a, b](EGraph& gg) {
          uint32_t len = static_cast<uint32_t>(a.size());
          uint32_t half = len / 2;
          auto split = [&gg, half](const std::vector<ClassId>& v) {
            ClassId hi = add_node(gg, Kind::Row,
                                  std::vector<ClassId>(v.begin(), v.begin() + half));
            ClassId lo = add_node(gg, Kind::Row,
                                  std::vector<ClassId>(v.begin() + half, v.end()));
            return std::pair{hi, lo};
          };
          auto [ah, al] = split(a);
          auto [bh, bl] = split(b);
          ClassId hh = add_node(gg, Kind::Mul, {ah, bh});
          ClassId hl = add_node(gg, Kind::Mul, {ah, bl});
          ClassId lh = add_node(gg, Kind::Mul, {al, bh});
          ClassId ll = add_node(gg, Kind::Mul, {al, bl});
          return add_node(gg, Kind::Sum,
                          {add_node(gg, Kind::Shl, {hh}, len),
                           add_node(gg, Kind::Shl, {hl}, half),
                           add_node(gg, Kind::Shl, {lh}, half), ll});
        }});
      }
    }
  };
  r.seeds = [] {
    return std::vector<TermPtr>{
        mk_mul(mk_row({V("a"), V("b")}), mk_row({V("c"), V("d")})),
        mk_mul(mk_row({V("a"), V("b"), V("c"), V("d")}),
               mk_row({V("e"), V("f"), V("g"), V("h")})),
    };
  };
  return r;
}

Rewrite rule_shl_normalize() {
  Rewrite r;
  r.name = "shl-normalize";
  r.phase = Phase::Pre;
  r.lhs_text = "(shl<k> (row ?a...))";
  r.rhs_text = "(row ?a... 0 x k)";
  r.root_kinds = {Kind::Shl};
  r.dynamic = [](const EGraph& g, ClassId cls, const ENode& n,
                 std::vector<PendingUnion>& out) {
    uint32_t k = n.a;
    for (const ENode* row : row_nodes(g, g.find(n.children[0]))) {
      std::vector<ClassId> slots(row->children.begin(), row->children.end());
      out.push_back({cls, [slots, k](EGraph& gg) {
                       std::vector<ClassId> next = slots;
                       ClassId zero = add_const(gg, 0);
                       next.insert(next.end(), k, zero);
                       return add_node(gg, Kind::Row, std::move(next));
                     }});
    }
  };
  r.seeds = [] {
    return std::vector<TermPtr>{
        mk_shl(mk_row({V("a"), V("b")}), 2),
        mk_shl(mk_row({V("a")}), 1),
    };
  };
  return r;
}

}  // namespace

std::vector<Rewrite> phase1_rules() {
  std::vector<Rewrite> rules;
  rules.push_back(static_rule("place-half-adder", Phase::One, "(add ?a ?b)",
                              "(row (hac ?a ?b) (has ?a ?b))", all_bound_bits));
  rules.push_back(static_rule("place-full-adder", Phase::One, "(add (add ?a ?b) ?c)",
                              "(row (fac ?a ?b ?c) (fas ?a ?b ?c))", all_bound_bits));
  rules.push_back(static_rule("add-same", Phase::One, "(add ?a ?a)", "(row ?a 0)"));
  rules.push_back(rule_row_add());
  rules.push_back(rule_sum_of_rows());
  rules.push_back(rule_sum_of_bits());
  rules.push_back(rule_row_of_rows());
  rules.push_back(rule_carry_merge());
  rules.push_back(rule_carry_expand());
  rules.push_back(rule_repeated_bit());
  rules.push_back(rule_constant_merge());
  rules.push_back(rule_sum_flatten());
  rules.push_back(rule_sum_sort());
  rules.push_back(static_rule("add-comm", Phase::One, "(add ?a ?b)", "(add ?b ?a)"));
  rules.push_back(
      static_rule("add-assoc", Phase::One, "(add (add ?a ?b) ?c)", "(add ?a (add ?b ?c))"));
  return rules;
}

std::vector<Rewrite> phase2_rules() {
  auto s = [](const char* name, const char* lhs, const char* rhs) {
    return static_rule(name, Phase::Two, lhs, rhs);
  };
  std::vector<Rewrite> rules;
  rules.push_back(s("half-adder-sum", "(has ?a ?b)", "(xor ?a ?b)"));
  rules.push_back(s("half-adder-carry", "(hac ?a ?b)", "(and ?a ?b)"));
  rules.push_back(s("full-adder-sum", "(fas ?a ?b ?c)", "(xor (xor ?a ?b) ?c)"));
  rules.push_back(
      s("full-adder-carry", "(fac ?a ?b ?c)", "(or (and ?a ?b) (and ?c (xor ?a ?b)))"));
  rules.push_back(s("sop-xor", "(xor ?a ?b)", "(or (and ?a (not ?b)) (and (not ?a) ?b))"));
  rules.push_back(s("demorgan-and", "(not (and ?a ?b))", "(or (not ?a) (not ?b))"));
  rules.push_back(s("demorgan-or", "(not (or ?a ?b))", "(and (not ?a) (not ?b))"));
  rules.push_back(s("distrib-and-or", "(and ?a (or ?b ?c))", "(or (and ?a ?b) (and ?a ?c))"));
  rules.push_back(
      s("distrib-and-xor", "(and ?a (xor ?b ?c))", "(xor (and ?a ?b) (and ?a ?c))"));
  rules.push_back(s("xor-and", "(xor ?a (and ?a ?b))", "(and ?a (not ?b))"));
  rules.push_back(s("or-not-and", "(or (not ?a) (and ?a ?b))", "(or (not ?a) ?b)"));
  rules.push_back(s("and-comm", "(and ?a ?b)", "(and ?b ?a)"));
  rules.push_back(s("or-comm", "(or ?a ?b)", "(or ?b ?a)"));
  rules.push_back(s("xor-comm", "(xor ?a ?b)", "(xor ?b ?a)"));
  rules.push_back(s("and-assoc", "(and (and ?a ?b) ?c)", "(and ?a (and ?b ?c))"));
  rules.push_back(s("or-assoc", "(or (or ?a ?b) ?c)", "(or ?a (or ?b ?c))"));
  rules.push_back(s("xor-assoc", "(xor (xor ?a ?b) ?c)", "(xor ?a (xor ?b ?c))"));
  rules.push_back(s("and-idem", "(and ?a ?a)", "?a"));
  rules.push_back(s("or-idem", "(or ?a ?a)", "?a"));
  rules.push_back(s("not-not", "(not (not ?a))", "?a"));
  rules.push_back(s("and-false", "(and ?a 0)", "0"));
  rules.push_back(s("and-true", "(and ?a 1)", "?a"));
  rules.push_back(s("or-false", "(or ?a 0)", "?a"));
  rules.push_back(s("or-true", "(or ?a 1)", "1"));
  rules.push_back(s("xor-false", "(xor ?a 0)", "?a"));
  rules.push_back(s("xor-true", "(xor ?a 1)", "(not ?a)"));
  rules.push_back(s("not-zero", "(not 0)", "1"));
  rules.push_back(s("not-one", "(not 1)", "0"));
  // Learnt from inspecting generated expressions: the factoring directions
  // and the absorption/complement laws the optimizer needs to close forms.
  rules.push_back(s("factor-and-or", "(or (and ?a ?b) (and ?a ?c))", "(and ?a (or ?b ?c))"));
  rules.push_back(
      s("factor-and-xor", "(xor (and ?a ?b) (and ?a ?c))", "(and ?a (xor ?b ?c))"));
  rules.push_back(s("and-compl", "(and ?a (not ?a))", "0"));
  rules.push_back(s("or-compl", "(or ?a (not ?a))", "1"));
  rules.push_back(s("xor-compl", "(xor ?a (not ?a))", "1"));
  rules.push_back(s("or-absorb", "(or ?a (and ?a ?b))", "?a"));
  rules.push_back(s("and-absorb", "(and ?a (or ?a ?b))", "?a"));
  return rules;
}

std::vector<Rewrite> prepass_rules(uint32_t) {
  std::vector<Rewrite> rules;
  rules.push_back(rule_divide_and_conquer());
  rules.push_back(rule_shl_normalize());
  return rules;
}

std::vector<Rewrite> all_rules(uint32_t width) {
  std::vector<Rewrite> rules = prepass_rules(width);
  for (auto& r : phase1_rules()) rules.push_back(std::move(r));
  for (auto& r : phase2_rules()) rules.push_back(std::move(r));
  return rules;
}

NodeIndex NodeIndex::build(const EGraph& g) {
  NodeIndex index;
  for (ClassId c : g.class_ids()) {
    uint32_t i = 0;
    for (const ENode& n : g.eclass(c).nodes)
      index.by_kind[static_cast<size_t>(n.kind)].emplace_back(c, i++);
  }
  return index;
}

namespace {

// Candidate (class, node) sites for a rule, in scan order.
std::vector<std::pair<ClassId, const ENode*>> candidate_sites(const EGraph& g,
                                                              const Rewrite& rule,
                                                              const NodeIndex* index) {
  std::vector<std::pair<ClassId, const ENode*>> sites;
  std::vector<Kind> kinds = rule.root_kinds;
  if (index && !kinds.empty()) {
    std::vector<std::pair<ClassId, uint32_t>> locs;
    for (Kind k : kinds) {
      const auto& v = index->by_kind[static_cast<size_t>(k)];
      locs.insert(locs.end(), v.begin(), v.end());
    }
    std::sort(locs.begin(), locs.end());
    sites.reserve(locs.size());
    for (auto [c, i] : locs) sites.emplace_back(c, &g.eclass(c).nodes[i]);
    return sites;
  }
  auto kind_ok = [&kinds](Kind k) {
    return kinds.empty() || std::find(kinds.begin(), kinds.end(), k) != kinds.end();
  };
  for (ClassId c : g.class_ids())
    for (const ENode& n : g.eclass(c).nodes)
      if (kind_ok(n.kind)) sites.emplace_back(c, &n);
  return sites;
}

}  // namespace

std::vector<PendingUnion> collect_matches(const EGraph& g, const Rewrite& rule,
                                          size_t cap, const NodeIndex* index) {
  std::vector<PendingUnion> out;
  std::vector<Subst> substs;
  for (auto [c, n] : candidate_sites(g, rule, index)) {
    if (rule.is_dynamic()) {
      rule.dynamic(g, c, *n, out);
      if (out.size() >= cap) {
        out.resize(cap);
        return out;
      }
    } else {
      substs.clear();
      ematch_node(g, *rule.lhs, c, *n, substs);
      for (Subst& s : substs) {
        if (rule.guard && !rule.guard(g, s)) continue;
        const Pattern* rhs = &*rule.rhs;
        out.push_back({c, [rhs, s](EGraph& gg) { return instantiate(gg, *rhs, s); }});
        if (out.size() >= cap) return out;
      }
    }
  }
  return out;
}

SoundnessResult soundness_check(const Rewrite& rule) {
  SoundnessResult result;
  for (const TermPtr& seed : rule.seeds ? rule.seeds() : std::vector<TermPtr>{}) {
    EGraph g;
    g.output_width =
        seed->kind == Kind::Row ? static_cast<uint32_t>(seed->children.size()) : 16;
    g.add_term(seed);
    g.rebuild();
    auto pending = collect_matches(g, rule, 10000);
    if (pending.empty()) {
      result.pass = false;
      result.counterexample = "rule did not fire on seed " + serialize(seed);
      return result;
    }
    for (PendingUnion& pu : pending) {
      ClassId lhs_cls = g.find(pu.cls);
      ClassId rhs_cls = pu.build(g);  // adds nodes, never merges
      auto terms = realize_min_all(g);
      TermPtr lhs = terms.at(g.find(lhs_cls));
      TermPtr rhs = terms.at(g.find(rhs_cls));
      auto lv = free_vars(lhs), rv = free_vars(rhs);
      std::vector<VarRef> vars;
      std::set_union(lv.begin(), lv.end(), rv.begin(), rv.end(), std::back_inserter(vars));
      if (vars.size() > 12) {
        result.pass = false;
        result.counterexample = "seed exceeds 12 free bits: " + serialize(seed);
        return result;
      }
      Wide mask = rule.soundness == Soundness::Modulo2W
                      ? (static_cast<Wide>(1) << g.output_width)
                      : 0;
      for (uint64_t assign = 0; assign < (1ull << vars.size()); ++assign) {
        Env env;
        for (size_t i = 0; i < vars.size(); ++i)
          env.set(vars[i].name, vars[i].index + 1, ((assign >> i) & 1) << vars[i].index);
        Wide l = eval(lhs, env), r = eval(rhs, env);
        bool equal = mask ? (l % mask) == (r % mask) : l == r;
        ++result.cases_checked;
        if (!equal) {
          result.pass = false;
          std::string cex;
          for (size_t i = 0; i < vars.size(); ++i) {
            if (i) cex += ' ';
            cex += vars[i].name + std::to_string(vars[i].index) + '=' +
                   std::to_string((assign >> i) & 1);
          }
          result.counterexample = "rule " + rule.name + ": " + serialize(lhs) +
                                  " != " + serialize(rhs) + " at " + cex;
          return result;
        }
      }
    }
  }
  return result;
}

}  // namespace optimult
