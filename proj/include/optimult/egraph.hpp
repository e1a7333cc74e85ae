#pragma once

// Congruence-closed equivalence graph over term nodes, with pattern
// matching and a deterministic saturation loop.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "optimult/term.hpp"

namespace optimult {

using ClassId = uint32_t;

struct ENode {
  Kind kind;
  uint32_t a = 0;  // Var: symbol id; Const: value; Shl: shift
  uint32_t b = 0;  // Var: bit index
  std::vector<ClassId> children;

  auto operator<=>(const ENode&) const = default;
};

struct ENodeHash {
  size_t operator()(const ENode& n) const;
};

struct EClass {
  std::vector<ENode> nodes;  // canonical, sorted and deduplicated at rebuild
  bool mod2w = false;        // joined by a rewrite sound only modulo 2^W
};

struct RunLimits {
  uint32_t max_iterations = 16;
  size_t max_nodes = 100000;   // cumulative nodes ever added
  size_t match_cap = 100000;   // per rule per iteration
};

enum class StopReason { Saturated, IterationLimit, NodeLimit };

const char* stop_reason_name(StopReason r);

struct RunStats {
  uint32_t iterations = 0;
  size_t nodes = 0;  // cumulative node count at stop
  StopReason reason = StopReason::Saturated;
};

struct Rewrite;  // rewrites.hpp

class EGraph {
 public:
  // Inserts a node (children are canonicalized first). Idempotent: a
  // congruent node returns the existing class.
  ClassId add(ENode n);
  ClassId add_term(const TermPtr& t);

  // Merges two classes; returns whether anything changed. Congruence
  // repair is deferred to rebuild(). mod2w marks unions that are sound
  // only modulo 2^output_width.
  bool merge(ClassId x, ClassId y, bool mod2w = false);

  ClassId find(ClassId id) const;
  bool needs_rebuild() const { return dirty_; }
  void rebuild();

  // Cumulative count of nodes ever added; never decreases.
  size_t node_count() const { return node_count_; }
  // Current number of distinct nodes (hashcons size).
  size_t distinct_nodes() const { return hashcons_.size(); }

  // Canonical class ids in ascending order.
  std::vector<ClassId> class_ids() const;
  const EClass& eclass(ClassId id) const { return classes_.at(find(id)); }
  bool class_tainted(ClassId id) const { return classes_.at(find(id)).mod2w; }

  // A class holds a single-bit value if any member node is of a bit kind
  // (all members of a sound class share one value).
  bool class_is_bit(ClassId id) const;

  uint32_t symbol(const std::string& name);  // interned var base name
  const std::string& symbol_name(uint32_t sym) const { return symbols_[sym]; }

  // Output width W used by modulo-2^W rewrites; 0 disables them.
  uint32_t output_width = 0;

  std::string node_text(const ENode& n) const;  // "(and 3 7)", "p0", "0"
  std::string dump_json() const;                // class -> node list

 private:
  ENode canonical(const ENode& n) const;

  mutable std::vector<ClassId> parent_;  // union-find, path compression
  std::map<ClassId, EClass> classes_;    // canonical roots only
  std::unordered_map<ENode, ClassId, ENodeHash> hashcons_;
  std::vector<std::string> symbols_;
  std::map<std::string, uint32_t> symbol_ids_;
  size_t node_count_ = 0;
  bool dirty_ = false;
};

// ---------------------------------------------------------------------
// Pattern matching. Syntax mirrors the term grammar with ?holes and an
// optional trailing ?rest... binder for row/sum:
//   "(add ?a ?a)"  "(row ?a ?tail...)"  "(xor ?a (and ?a ?b))"  "0"
struct Pattern {
  enum class Op { Hole, Node };
  Op op = Op::Hole;
  std::string hole;                // Op::Hole
  Kind kind = Kind::Var;           // Op::Node
  uint32_t a = 0;                  // Const value / Shl amount
  std::vector<Pattern> children;
  std::string rest;                // non-empty: trailing rest binder

  static Pattern parse(std::string_view text);
  std::string text() const;
};

struct Subst {
  std::vector<std::pair<std::string, ClassId>> bind;
  std::vector<std::pair<std::string, std::vector<ClassId>>> rest;

  const ClassId* find(std::string_view name) const;
  ClassId at(std::string_view name) const;                      // throws
  const std::vector<ClassId>& rest_at(std::string_view) const;  // throws
};

// All matches of the pattern against one class, deterministic order.
std::vector<Subst> ematch(const EGraph& g, const Pattern& p, ClassId root);
// Matches of a node-rooted pattern against one concrete node of cls.
void ematch_node(const EGraph& g, const Pattern& p, ClassId cls, const ENode& node,
                 std::vector<Subst>& out);
// Matches across the whole graph as (class, substitution) pairs, capped.
std::vector<std::pair<ClassId, Subst>> ematch_all(const EGraph& g, const Pattern& p,
                                                  size_t cap);
// Builds the pattern instance bottom-up, returning its class.
ClassId instantiate(EGraph& g, const Pattern& p, const Subst& s);

// One saturation step applies every rule's matches constructively
// (add + merge), then rebuilds. Runs until no rule changes the graph or a
// limit trips. Deterministic for a fixed graph and rule list.
StopReason run(EGraph& g, const std::vector<Rewrite>& rules, const RunLimits& limits,
               RunStats* stats = nullptr);

// Tree form of a node given already-realized children.
TermPtr enode_to_term(const EGraph& g, const ENode& n, std::vector<TermPtr> children);

// Smallest-tree realization (by node count) of every class that has one.
std::map<ClassId, TermPtr> realize_min_all(const EGraph& g);

}  // namespace optimult
