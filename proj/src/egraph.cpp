#include "optimult/egraph.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <functional>

#include <nlohmann/json.hpp>

#include "optimult/rewrites.hpp"

namespace optimult {

size_t ENodeHash::operator()(const ENode& n) const {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&h](uint64_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  mix(static_cast<uint64_t>(n.kind));
  mix(n.a);
  mix(n.b);
  for (ClassId c : n.children) mix(c);
  return static_cast<size_t>(h);
}

const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::Saturated: return "saturated";
    case StopReason::IterationLimit: return "iteration_limit";
    case StopReason::NodeLimit: return "node_limit";
  }
  return "?";
}

ClassId EGraph::find(ClassId id) const {
  while (parent_[id] != id) {
    parent_[id] = parent_[parent_[id]];
    id = parent_[id];
  }
  return id;
}

ENode EGraph::canonical(const ENode& n) const {
  ENode cn = n;
  for (ClassId& c : cn.children) c = find(c);
  return cn;
}

ClassId EGraph::add(ENode n) {
  ENode cn = canonical(n);
  auto it = hashcons_.find(cn);
  if (it != hashcons_.end()) return find(it->second);
  ClassId id = static_cast<ClassId>(parent_.size());
  parent_.push_back(id);
  classes_[id].nodes.push_back(cn);
  hashcons_.emplace(std::move(cn), id);
  ++node_count_;
  return id;
}

namespace {

ClassId add_term_rec(EGraph& g, const TermPtr& t,
                     std::unordered_map<const Term*, ClassId>& memo) {
  auto it = memo.find(t.get());
  if (it != memo.end()) return it->second;
  ENode n;
  n.kind = t->kind;
  if (t->kind == Kind::Var) {
    n.a = g.symbol(t->var);
    n.b = t->a;
  } else {
    n.a = t->a;
  }
  n.children.reserve(t->children.size());
  for (const auto& c : t->children) n.children.push_back(add_term_rec(g, c, memo));
  ClassId id = g.add(std::move(n));
  memo.emplace(t.get(), id);
  return id;
}

}  // namespace

ClassId EGraph::add_term(const TermPtr& t) {
  if (!t) throw std::invalid_argument("null term");
  std::unordered_map<const Term*, ClassId> memo;
  return add_term_rec(*this, t, memo);
}

bool EGraph::merge(ClassId x, ClassId y, bool mod2w) {
  ClassId rx = find(x), ry = find(y);
  if (rx == ry) return false;
  ClassId keep = std::min(rx, ry), drop = std::max(rx, ry);
  EClass& kc = classes_[keep];
  EClass& dc = classes_[drop];
  kc.nodes.insert(kc.nodes.end(), dc.nodes.begin(), dc.nodes.end());
  kc.mod2w = kc.mod2w || dc.mod2w || mod2w;
  classes_.erase(drop);
  parent_[drop] = keep;
  dirty_ = true;
  return true;
}

void EGraph::rebuild() {
  // Full re-canonicalization to fixpoint: congruent nodes in distinct
  // classes force unions until none remain.
  bool any = true;
  while (any) {
    any = false;
    std::vector<std::pair<ClassId, ENode>> all;
    all.reserve(hashcons_.size());
    for (const auto& [id, cls] : classes_)
      for (const ENode& n : cls.nodes) all.emplace_back(id, canonical(n));
    std::unordered_map<ENode, ClassId, ENodeHash> fresh;
    fresh.reserve(all.size());
    for (auto& [id, cn] : all) {
      auto [it, inserted] = fresh.try_emplace(cn, find(id));
      if (!inserted && find(it->second) != find(id)) {
        merge(it->second, id);
        any = true;
      }
    }
  }
  hashcons_.clear();
  for (auto& [id, cls] : classes_) {
    for (ENode& n : cls.nodes) n = canonical(n);
    std::sort(cls.nodes.begin(), cls.nodes.end());
    cls.nodes.erase(std::unique(cls.nodes.begin(), cls.nodes.end()), cls.nodes.end());
    for (const ENode& n : cls.nodes) hashcons_[n] = id;
  }
  dirty_ = false;
}

std::vector<ClassId> EGraph::class_ids() const {
  std::vector<ClassId> ids;
  ids.reserve(classes_.size());
  for (const auto& [id, cls] : classes_) ids.push_back(id);
  return ids;
}

bool EGraph::class_is_bit(ClassId id) const {
  for (const ENode& n : eclass(id).nodes)
    if (kind_is_bit(n.kind)) return true;
  return false;
}

uint32_t EGraph::symbol(const std::string& name) {
  auto it = symbol_ids_.find(name);
  if (it != symbol_ids_.end()) return it->second;
  uint32_t id = static_cast<uint32_t>(symbols_.size());
  symbols_.push_back(name);
  symbol_ids_.emplace(name, id);
  return id;
}

std::string EGraph::node_text(const ENode& n) const {
  switch (n.kind) {
    case Kind::Var: return symbols_[n.a] + std::to_string(n.b);
    case Kind::Const: return n.a ? "1" : "0";
    default: break;
  }
  std::string out = "(";
  out += kind_token(n.kind);
  if (n.kind == Kind::Shl) out += std::to_string(n.a);
  for (ClassId c : n.children) {
    out += ' ';
    out += std::to_string(find(c));
  }
  out += ')';
  return out;
}

std::string EGraph::dump_json() const {
  nlohmann::json j;
  j["classes"] = nlohmann::json::array();
  for (const auto& [id, cls] : classes_) {
    nlohmann::json jc;
    jc["id"] = id;
    if (cls.mod2w) jc["mod2w"] = true;
    auto& nodes = jc["nodes"] = nlohmann::json::array();
    for (const ENode& n : cls.nodes) nodes.push_back(node_text(n));
    j["classes"].push_back(std::move(jc));
  }
  return j.dump(2);
}

// --------------------------------------------------------------------
// Patterns

namespace {

struct PatParser {
  std::string_view text;
  size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  std::string_view atom() {
    size_t start = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) &&
           text[pos] != '(' && text[pos] != ')')
      ++pos;
    if (pos == start) throw ParseError("expected pattern atom", start);
    return text.substr(start, pos - start);
  }

  Pattern pattern() {
    skip_ws();
    if (pos >= text.size()) throw ParseError("unexpected end of pattern", pos);
    if (text[pos] != '(') {
      size_t at = pos;
      std::string_view a = atom();
      Pattern p;
      if (a.size() > 1 && a[0] == '?') {
        p.op = Pattern::Op::Hole;
        p.hole = std::string(a.substr(1));
        return p;
      }
      if (a == "0" || a == "1") {
        p.op = Pattern::Op::Node;
        p.kind = Kind::Const;
        p.a = a == "1";
        return p;
      }
      throw ParseError("unknown pattern atom '" + std::string(a) + "'", at);
    }
    size_t open = pos++;
    skip_ws();
    std::string op(atom());
    Pattern p;
    p.op = Pattern::Op::Node;
    if (op.rfind("shl", 0) == 0 && op.size() > 3) {
      p.kind = Kind::Shl;
      p.a = static_cast<uint32_t>(std::stoul(op.substr(3)));
    } else if (op == "and") p.kind = Kind::And;
    else if (op == "or") p.kind = Kind::Or;
    else if (op == "xor") p.kind = Kind::Xor;
    else if (op == "not") p.kind = Kind::Not;
    else if (op == "add") p.kind = Kind::Add;
    else if (op == "row") p.kind = Kind::Row;
    else if (op == "sum") p.kind = Kind::Sum;
    else if (op == "mul") p.kind = Kind::Mul;
    else if (op == "fas") p.kind = Kind::FAs;
    else if (op == "fac") p.kind = Kind::FAc;
    else if (op == "has") p.kind = Kind::HAs;
    else if (op == "hac") p.kind = Kind::HAc;
    else throw ParseError("unknown pattern operator '" + op + "'", open);

    while (true) {
      skip_ws();
      if (pos >= text.size()) throw ParseError("missing ')'", open);
      if (text[pos] == ')') {
        ++pos;
        break;
      }
      if (text[pos] == '?') {
        size_t at = pos;
        std::string_view a = atom();
        if (a.size() > 4 && a.substr(a.size() - 3) == "...") {
          if (p.kind != Kind::Row && p.kind != Kind::Sum)
            throw ParseError("rest binder only allowed in row/sum", at);
          p.rest = std::string(a.substr(1, a.size() - 4));
          skip_ws();
          if (pos >= text.size() || text[pos] != ')')
            throw ParseError("rest binder must be last", at);
          ++pos;
          break;
        }
        Pattern h;
        h.op = Pattern::Op::Hole;
        h.hole = std::string(a.substr(1));
        p.children.push_back(std::move(h));
        continue;
      }
      p.children.push_back(pattern());
    }
    return p;
  }
};

}  // namespace

Pattern Pattern::parse(std::string_view text) {
  PatParser pp{text};
  Pattern p = pp.pattern();
  pp.skip_ws();
  if (pp.pos != text.size()) throw ParseError("trailing pattern input", pp.pos);
  return p;
}

std::string Pattern::text() const {
  if (op == Op::Hole) return "?" + hole;
  if (kind == Kind::Const) return a ? "1" : "0";
  std::string out = "(";
  out += kind_token(kind);
  if (kind == Kind::Shl) out += std::to_string(a);
  for (const Pattern& c : children) {
    out += ' ';
    out += c.text();
  }
  if (!rest.empty()) {
    out += " ?";
    out += rest;
    out += "...";
  }
  out += ')';
  return out;
}

const ClassId* Subst::find(std::string_view name) const {
  for (const auto& [k, v] : bind)
    if (k == name) return &v;
  return nullptr;
}

ClassId Subst::at(std::string_view name) const {
  const ClassId* v = find(name);
  if (!v) throw std::out_of_range("unbound hole ?" + std::string(name));
  return *v;
}

const std::vector<ClassId>& Subst::rest_at(std::string_view name) const {
  for (const auto& [k, v] : rest)
    if (k == name) return v;
  throw std::out_of_range("unbound rest binder ?" + std::string(name) + "...");
}

namespace {

void match_pat(const EGraph& g, const Pattern& p, ClassId cls, const Subst& cur,
               std::vector<Subst>& out);

void match_node(const EGraph& g, const Pattern& p, const ENode& n, const Subst& cur,
                std::vector<Subst>& out) {
  if (n.kind != p.kind) return;
  if ((p.kind == Kind::Const || p.kind == Kind::Shl) && n.a != p.a) return;
  size_t fixed = p.children.size();
  if (p.rest.empty() ? n.children.size() != fixed : n.children.size() < fixed) return;
  std::vector<Subst> partial{cur};
  for (size_t i = 0; i < fixed && !partial.empty(); ++i) {
    std::vector<Subst> next;
    for (const Subst& s : partial) match_pat(g, p.children[i], n.children[i], s, next);
    partial = std::move(next);
  }
  for (Subst& s : partial) {
    if (!p.rest.empty()) {
      std::vector<ClassId> tail;
      tail.reserve(n.children.size() - fixed);
      for (size_t i = fixed; i < n.children.size(); ++i) tail.push_back(g.find(n.children[i]));
      if (const auto* bound = [&]() -> const std::vector<ClassId>* {
            for (const auto& [k, v] : s.rest)
              if (k == p.rest) return &v;
            return nullptr;
          }()) {
        if (*bound != tail) continue;
      } else {
        s.rest.emplace_back(p.rest, std::move(tail));
      }
    }
    out.push_back(std::move(s));
  }
}

void match_pat(const EGraph& g, const Pattern& p, ClassId cls, const Subst& cur,
               std::vector<Subst>& out) {
  cls = g.find(cls);
  if (p.op == Pattern::Op::Hole) {
    if (const ClassId* bound = cur.find(p.hole)) {
      if (g.find(*bound) == cls) out.push_back(cur);
      return;
    }
    Subst s = cur;
    s.bind.emplace_back(p.hole, cls);
    out.push_back(std::move(s));
    return;
  }
  for (const ENode& n : g.eclass(cls).nodes) match_node(g, p, n, cur, out);
}

}  // namespace

std::vector<Subst> ematch(const EGraph& g, const Pattern& p, ClassId root) {
  std::vector<Subst> out;
  match_pat(g, p, root, Subst{}, out);
  return out;
}

void ematch_node(const EGraph& g, const Pattern& p, ClassId cls, const ENode& node,
                 std::vector<Subst>& out) {
  (void)cls;
  match_node(g, p, node, Subst{}, out);
}

std::vector<std::pair<ClassId, Subst>> ematch_all(const EGraph& g, const Pattern& p,
                                                  size_t cap) {
  std::vector<std::pair<ClassId, Subst>> out;
  for (ClassId c : g.class_ids()) {
    for (Subst& s : ematch(g, p, c)) {
      out.emplace_back(c, std::move(s));
      if (out.size() >= cap) return out;
    }
  }
  return out;
}

ClassId instantiate(EGraph& g, const Pattern& p, const Subst& s) {
  if (p.op == Pattern::Op::Hole) return g.find(s.at(p.hole));
  ENode n;
  n.kind = p.kind;
  n.a = p.a;
  n.children.reserve(p.children.size());
  for (const Pattern& c : p.children) n.children.push_back(instantiate(g, c, s));
  if (!p.rest.empty()) {
    const auto& tail = s.rest_at(p.rest);
    n.children.insert(n.children.end(), tail.begin(), tail.end());
  }
  return g.add(std::move(n));
}

StopReason run(EGraph& g, const std::vector<Rewrite>& rules, const RunLimits& limits,
               RunStats* stats) {
  auto finish = [&](StopReason r, uint32_t iters) {
    if (stats) {
      stats->iterations = iters;
      stats->nodes = g.node_count();
      stats->reason = r;
    }
    return r;
  };
  if (g.needs_rebuild()) g.rebuild();
  for (uint32_t iter = 0;; ++iter) {
    if (iter >= limits.max_iterations) return finish(StopReason::IterationLimit, iter);
    if (g.node_count() > limits.max_nodes) return finish(StopReason::NodeLimit, iter);

    NodeIndex index = NodeIndex::build(g);
    std::vector<PendingUnion> pending;
    for (const Rewrite& rule : rules) {
      auto m = collect_matches(g, rule, limits.match_cap, &index);
      pending.insert(pending.end(), std::make_move_iterator(m.begin()),
                     std::make_move_iterator(m.end()));
    }

    bool changed = false;
    bool over_budget = false;
    for (PendingUnion& pu : pending) {
      ClassId rhs = pu.build(g);
      changed |= g.merge(pu.cls, rhs, pu.mod2w);
      if (g.node_count() > limits.max_nodes) {
        over_budget = true;
        break;
      }
    }
    g.rebuild();
    if (over_budget) return finish(StopReason::NodeLimit, iter + 1);
    if (!changed) return finish(StopReason::Saturated, iter + 1);
  }
}

TermPtr enode_to_term(const EGraph& g, const ENode& n, std::vector<TermPtr> children) {
  switch (n.kind) {
    case Kind::Var: return mk_var(g.symbol_name(n.a), n.b);
    case Kind::Const: return mk_const(static_cast<int>(n.a));
    default: return mk_node(n.kind, std::move(children), n.a);
  }
}

std::map<ClassId, TermPtr> realize_min_all(const EGraph& g) {
  auto ids = g.class_ids();
  std::map<ClassId, uint64_t> size;
  std::map<ClassId, const ENode*> best;
  bool changed = true;
  while (changed) {
    changed = false;
    for (ClassId c : ids) {
      for (const ENode& n : g.eclass(c).nodes) {
        uint64_t sz = 1;
        bool ready = true;
        for (ClassId ch : n.children) {
          auto it = size.find(g.find(ch));
          if (it == size.end()) {
            ready = false;
            break;
          }
          sz += it->second;
        }
        if (!ready) continue;
        auto it = size.find(c);
        if (it == size.end() || sz < it->second) {
          size[c] = sz;
          best[c] = &n;
          changed = true;
        }
      }
    }
  }
  std::map<ClassId, TermPtr> terms;
  std::function<TermPtr(ClassId)> realize = [&](ClassId c) -> TermPtr {
    c = g.find(c);
    auto it = terms.find(c);
    if (it != terms.end()) return it->second;
    const ENode* n = best.at(c);
    std::vector<TermPtr> children;
    children.reserve(n->children.size());
    for (ClassId ch : n->children) children.push_back(realize(ch));
    TermPtr t = enode_to_term(g, *n, std::move(children));
    terms[c] = t;
    return t;
  };
  for (const auto& [c, n] : best) realize(c);
  return terms;
}

}  // namespace optimult
