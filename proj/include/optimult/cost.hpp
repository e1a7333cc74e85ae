#pragma once

// Per-phase delay cost models and best-implementation extraction.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "optimult/egraph.hpp"
#include "optimult/rewrites.hpp"

namespace optimult {

// Ordered lexicographically: critical-path delay first, then gate count,
// then tree size. The size component keeps tie-broken selections acyclic.
struct Cost {
  uint64_t delay = 0;
  uint64_t area = 0;
  uint64_t size = 0;

  auto operator<=>(const Cost&) const = default;
};

struct CostModel {
  Phase phase = Phase::One;
  uint64_t penalty = 1ull << 32;

  static CostModel phase1();
  static CostModel phase2();

  // Unit gate delays and gate counts for the well-defined operators.
  static uint64_t gate_delay(Kind k);
  static uint64_t gate_area(Kind k);
};

// Cost of one node given its phase, chosen child costs, and whether every
// child class holds a single-bit value. is_root marks the top-level output
// row, which phase 2 costs as the max over its slots.
Cost node_cost(const CostModel& model, Kind kind, const std::vector<Cost>& child_costs,
               bool children_are_bits, bool is_root = false);

struct ExtractError : std::runtime_error {
  ExtractError(Phase phase, const std::string& detail);
  Phase phase;
};

// Bottom-up fixed-point relaxation; returns the best tree realization of
// root and its cost. Shared classes are expanded per use (fan-out one).
// Throws ExtractError when the root never drops below the penalty.
std::pair<TermPtr, Cost> extract(const EGraph& g, ClassId root, const CostModel& model);

}  // namespace optimult
