#pragma once

// The rewrite library: compressor placement and row/sum restructuring
// (phase 1), gate-level Boolean rewriting (phase 2), and the operand
// splitting pre-pass. Every rule is a checkable value.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "optimult/egraph.hpp"

namespace optimult {

enum class Phase { Pre, One, Two };
const char* phase_name(Phase p);

enum class Soundness { Exact, Modulo2W };
const char* soundness_name(Soundness s);

// A union queued during the match stage and built during the apply stage.
// `build` may add nodes but never merges.
struct PendingUnion {
  ClassId cls;
  std::function<ClassId(EGraph&)> build;
  bool mod2w = false;  // union is sound only modulo 2^output_width
};

struct Rewrite {
  std::string name;
  Phase phase = Phase::One;
  Soundness soundness = Soundness::Exact;
  std::string lhs_text, rhs_text;  // catalogue display

  // Static rule: pattern pair plus an optional guard on the match.
  std::optional<Pattern> lhs, rhs;
  std::function<bool(const EGraph&, const Subst&)> guard;

  // Dynamic rule: called once per (class, node) whose kind is in
  // root_kinds, on a frozen graph; queues unions for the apply stage.
  std::vector<Kind> root_kinds;
  std::function<void(const EGraph&, ClassId, const ENode&,
                     std::vector<PendingUnion>&)> dynamic;

  // Seed instances for the soundness check (left-hand-side terms the
  // rule is expected to fire on, over fresh single-bit variables).
  std::function<std::vector<TermPtr>()> seeds;

  bool is_dynamic() const { return static_cast<bool>(dynamic); }
};

std::vector<Rewrite> phase1_rules();
std::vector<Rewrite> phase2_rules();
std::vector<Rewrite> prepass_rules(uint32_t width);
std::vector<Rewrite> all_rules(uint32_t width = 4);

// Node locations grouped by kind, in the deterministic scan order
// (ascending class id, sorted node order). Built once per iteration.
struct NodeIndex {
  std::array<std::vector<std::pair<ClassId, uint32_t>>, kKindCount> by_kind;
  static NodeIndex build(const EGraph& g);
};

// Collects this rule's pending unions over a frozen graph (match stage
// of one iteration), in deterministic order, capped.
std::vector<PendingUnion> collect_matches(const EGraph& g, const Rewrite& rule,
                                          size_t cap, const NodeIndex* index = nullptr);

struct SoundnessResult {
  bool pass = true;
  uint64_t cases_checked = 0;
  std::string counterexample;  // empty when pass
};

// Instantiates the rule on its seed terms inside a scratch e-graph,
// realizes both sides of every queued union, and compares valuations
// exhaustively over the free bits (modulo 2^W for Modulo2W rules).
SoundnessResult soundness_check(const Rewrite& rule);

}  // namespace optimult
