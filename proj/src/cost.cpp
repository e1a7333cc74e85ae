#include "optimult/cost.hpp"

#include <algorithm>
#include <functional>

namespace optimult {

namespace {

constexpr uint64_t kCap = 1ull << 62;

uint64_t sat_add(uint64_t a, uint64_t b) { return std::min(kCap, a + b); }

}  // namespace

CostModel CostModel::phase1() { return CostModel{Phase::One, 1ull << 32}; }
CostModel CostModel::phase2() { return CostModel{Phase::Two, 1ull << 32}; }

uint64_t CostModel::gate_delay(Kind k) {
  switch (k) {
    case Kind::Var:
    case Kind::Const: return 0;
    case Kind::And:
    case Kind::Or:
    case Kind::Xor:
    case Kind::Not:
    case Kind::HAs:
    case Kind::HAc: return 1;
    case Kind::FAs:
    case Kind::FAc: return 2;
    default: return 0;
  }
}

uint64_t CostModel::gate_area(Kind k) {
  switch (k) {
    case Kind::And:
    case Kind::Or:
    case Kind::Xor:
    case Kind::Not:
    case Kind::HAs:
    case Kind::HAc: return 1;
    case Kind::FAs: return 2;  // two cascaded xor gates
    case Kind::FAc: return 4;  // two and, one xor, one or
    default: return 0;
  }
}

Cost node_cost(const CostModel& model, Kind kind, const std::vector<Cost>& child_costs,
               bool children_are_bits, bool is_root) {
  uint64_t max_delay = 0, area = 0, size = 1;
  for (const Cost& c : child_costs) {
    max_delay = std::max(max_delay, c.delay);
    area = sat_add(area, c.area);
    size = sat_add(size, c.size);
  }

  uint64_t own_delay = 0;
  switch (kind) {
    case Kind::Var:
    case Kind::Const:
    case Kind::And:
    case Kind::Or:
    case Kind::Xor:
    case Kind::Not:
      own_delay = CostModel::gate_delay(kind);
      break;
    case Kind::HAs:
    case Kind::HAc:
    case Kind::FAs:
    case Kind::FAc:
      own_delay = model.phase == Phase::Two ? model.penalty : CostModel::gate_delay(kind);
      break;
    case Kind::Row:
      if (model.phase == Phase::One) {
        own_delay = children_are_bits ? 0 : model.penalty;
      } else {
        own_delay = is_root ? 0 : model.penalty;
      }
      break;
    case Kind::Sum:
    case Kind::Add:
    case Kind::Mul:
    case Kind::Shl:
      own_delay = model.penalty;
      break;
  }
  return Cost{sat_add(max_delay, own_delay), sat_add(area, CostModel::gate_area(kind)),
              size};
}

ExtractError::ExtractError(Phase ph, const std::string& detail)
    : std::runtime_error("target shape unreachable in phase " +
                         std::string(phase_name(ph)) + ": " + detail),
      phase(ph) {}

std::pair<TermPtr, Cost> extract(const EGraph& g, ClassId root, const CostModel& model) {
  // Dense class indexing keeps the relaxation passes allocation-free.
  auto ids = g.class_ids();
  std::unordered_map<ClassId, uint32_t> dense;
  dense.reserve(ids.size());
  for (uint32_t i = 0; i < ids.size(); ++i) dense.emplace(ids[i], i);

  struct FlatNode {
    const ENode* node;
    uint32_t cls;
    uint32_t child_begin, child_end;
  };
  std::vector<FlatNode> nodes;
  std::vector<uint32_t> children;
  std::vector<char> is_bit(ids.size());
  for (uint32_t i = 0; i < ids.size(); ++i) {
    is_bit[i] = g.class_is_bit(ids[i]);
    for (const ENode& n : g.eclass(ids[i]).nodes) {
      uint32_t begin = static_cast<uint32_t>(children.size());
      for (ClassId ch : n.children) children.push_back(dense.at(g.find(ch)));
      nodes.push_back({&n, i, begin, static_cast<uint32_t>(children.size())});
    }
  }

  std::vector<Cost> best_cost(ids.size());
  std::vector<char> has_cost(ids.size(), 0);
  std::vector<int64_t> best_node(ids.size(), -1);

  std::vector<Cost> scratch;
  auto cost_of = [&](const FlatNode& f, bool as_root) -> std::optional<Cost> {
    scratch.clear();
    bool bits = true;
    for (uint32_t i = f.child_begin; i < f.child_end; ++i) {
      uint32_t c = children[i];
      if (!has_cost[c]) return std::nullopt;
      scratch.push_back(best_cost[c]);
      bits = bits && is_bit[c];
    }
    return node_cost(model, f.node->kind, scratch, bits, as_root);
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < nodes.size(); ++i) {
      auto cost = cost_of(nodes[i], false);
      if (!cost) continue;
      uint32_t c = nodes[i].cls;
      if (!has_cost[c] || *cost < best_cost[c]) {
        has_cost[c] = 1;
        best_cost[c] = *cost;
        best_node[c] = static_cast<int64_t>(i);
        changed = true;
      }
    }
  }

  uint32_t r = dense.at(g.find(root));
  if (!has_cost[r])
    throw ExtractError(model.phase, "no finite realization of the root class");
  Cost root_cost = best_cost[r];
  int64_t root_pick = best_node[r];

  if (model.phase == Phase::Two) {
    // The top-level output row is exempt from the structural penalty.
    for (size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].cls != r) continue;
      auto cost = cost_of(nodes[i], true);
      if (cost && *cost < root_cost) {
        root_cost = *cost;
        root_pick = static_cast<int64_t>(i);
      }
    }
  }

  if (root_cost.delay >= model.penalty)
    throw ExtractError(model.phase,
                       "best delay " + std::to_string(root_cost.delay) +
                           " stayed at or above the penalty " +
                           std::to_string(model.penalty));

  std::vector<TermPtr> memo(ids.size());
  std::function<TermPtr(uint32_t)> realize = [&](uint32_t c) -> TermPtr {
    if (memo[c]) return memo[c];
    const FlatNode& f = nodes[static_cast<size_t>(best_node[c])];
    std::vector<TermPtr> kids;
    kids.reserve(f.child_end - f.child_begin);
    for (uint32_t i = f.child_begin; i < f.child_end; ++i) kids.push_back(realize(children[i]));
    return memo[c] = enode_to_term(g, *f.node, std::move(kids));
  };

  const FlatNode& rf = nodes[static_cast<size_t>(root_pick)];
  std::vector<TermPtr> kids;
  kids.reserve(rf.child_end - rf.child_begin);
  for (uint32_t i = rf.child_begin; i < rf.child_end; ++i) kids.push_back(realize(children[i]));
  return {enode_to_term(g, *rf.node, std::move(kids)), root_cost};
}

}  // namespace optimult
