#include "optimult/term.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace optimult {

const char* kind_token(Kind k) {
  switch (k) {
    case Kind::Var: return "<var>";
    case Kind::Const: return "<const>";
    case Kind::And: return "and";
    case Kind::Or: return "or";
    case Kind::Xor: return "xor";
    case Kind::Not: return "not";
    case Kind::Add: return "add";
    case Kind::Row: return "row";
    case Kind::Sum: return "sum";
    case Kind::Shl: return "shl";
    case Kind::Mul: return "mul";
    case Kind::FAs: return "fas";
    case Kind::FAc: return "fac";
    case Kind::HAs: return "has";
    case Kind::HAc: return "hac";
  }
  return "?";
}

bool kind_is_bit(Kind k) {
  switch (k) {
    case Kind::Var:
    case Kind::Const:
    case Kind::And:
    case Kind::Or:
    case Kind::Xor:
    case Kind::Not:
    case Kind::FAs:
    case Kind::FAc:
    case Kind::HAs:
    case Kind::HAc:
      return true;
    default:
      return false;
  }
}

size_t kind_min_arity(Kind k) {
  switch (k) {
    case Kind::Var:
    case Kind::Const: return 0;
    case Kind::Not:
    case Kind::Shl: return 1;
    case Kind::Row: return 1;
    case Kind::Sum: return 2;
    case Kind::FAs:
    case Kind::FAc: return 3;
    default: return 2;
  }
}

size_t kind_max_arity(Kind k) {
  switch (k) {
    case Kind::Var:
    case Kind::Const: return 0;
    case Kind::Not:
    case Kind::Shl: return 1;
    case Kind::Row:
    case Kind::Sum: return SIZE_MAX;
    case Kind::FAs:
    case Kind::FAc: return 3;
    default: return 2;
  }
}

TermPtr mk_node(Kind k, std::vector<TermPtr> children, uint32_t a, std::string var) {
  size_t n = children.size();
  if (n < kind_min_arity(k) || n > kind_max_arity(k))
    throw std::invalid_argument(std::string(kind_token(k)) + ": bad arity " +
                                std::to_string(n));
  for (const auto& c : children)
    if (!c) throw std::invalid_argument("null child");
  if (k == Kind::Const && a > 1)
    throw std::invalid_argument("const must be 0 or 1");
  auto t = std::make_shared<Term>();
  t->kind = k;
  t->a = a;
  t->var = std::move(var);
  t->children = std::move(children);
  return t;
}

TermPtr mk_var(std::string name, uint32_t index) {
  if (name.empty()) throw std::invalid_argument("empty variable name");
  return mk_node(Kind::Var, {}, index, std::move(name));
}
TermPtr mk_const(int value) {
  if (value != 0 && value != 1) throw std::invalid_argument("const must be 0 or 1");
  return mk_node(Kind::Const, {}, static_cast<uint32_t>(value));
}
TermPtr mk_and(TermPtr x, TermPtr y) { return mk_node(Kind::And, {std::move(x), std::move(y)}); }
TermPtr mk_or(TermPtr x, TermPtr y) { return mk_node(Kind::Or, {std::move(x), std::move(y)}); }
TermPtr mk_xor(TermPtr x, TermPtr y) { return mk_node(Kind::Xor, {std::move(x), std::move(y)}); }
TermPtr mk_not(TermPtr x) { return mk_node(Kind::Not, {std::move(x)}); }
TermPtr mk_add(TermPtr x, TermPtr y) { return mk_node(Kind::Add, {std::move(x), std::move(y)}); }
TermPtr mk_row(std::vector<TermPtr> slots) { return mk_node(Kind::Row, std::move(slots)); }
TermPtr mk_sum(std::vector<TermPtr> operands) { return mk_node(Kind::Sum, std::move(operands)); }
TermPtr mk_shl(TermPtr x, uint32_t amount) { return mk_node(Kind::Shl, {std::move(x)}, amount); }
TermPtr mk_mul(TermPtr x, TermPtr y) { return mk_node(Kind::Mul, {std::move(x), std::move(y)}); }
TermPtr mk_fas(TermPtr a, TermPtr b, TermPtr c) {
  return mk_node(Kind::FAs, {std::move(a), std::move(b), std::move(c)});
}
TermPtr mk_fac(TermPtr a, TermPtr b, TermPtr c) {
  return mk_node(Kind::FAc, {std::move(a), std::move(b), std::move(c)});
}
TermPtr mk_has(TermPtr a, TermPtr b) { return mk_node(Kind::HAs, {std::move(a), std::move(b)}); }
TermPtr mk_hac(TermPtr a, TermPtr b) { return mk_node(Kind::HAc, {std::move(a), std::move(b)}); }

ParseError::ParseError(const std::string& msg, size_t position)
    : std::runtime_error(msg + " at offset " + std::to_string(position)),
      pos(position) {}

void Env::set(const std::string& name, uint32_t width, uint64_t value) {
  words_[name] = {width, value};
}

int Env::bit(const std::string& name, uint32_t index) const {
  auto it = words_.find(name);
  if (it == words_.end() || index >= it->second.first)
    throw EvalError("unbound variable " + name + std::to_string(index));
  return static_cast<int>((it->second.second >> index) & 1);
}

Env Env::pq(uint32_t width, bool square, uint64_t p, uint64_t q) {
  Env env;
  env.set("p", width, p);
  if (!square) env.set("q", width, q);
  return env;
}

namespace {

Wide eval_rec(const Term& t, const Env& env,
              std::unordered_map<const Term*, Wide>& memo) {
  auto it = memo.find(&t);
  if (it != memo.end()) return it->second;

  auto child = [&](size_t i) { return eval_rec(*t.children[i], env, memo); };
  auto bit = [&](size_t i) {
    Wide v = child(i);
    if (v > 1)
      throw EvalError(std::string("non-bit operand to ") + kind_token(t.kind));
    return v;
  };

  Wide v = 0;
  switch (t.kind) {
    case Kind::Var: v = static_cast<Wide>(env.bit(t.var, t.a)); break;
    case Kind::Const: v = t.a; break;
    case Kind::And: v = bit(0) & bit(1); break;
    case Kind::Or: v = bit(0) | bit(1); break;
    case Kind::Xor: v = bit(0) ^ bit(1); break;
    case Kind::Not: v = 1 - bit(0); break;
    case Kind::Add: v = child(0) + child(1); break;
    case Kind::Sum:
      for (size_t i = 0; i < t.children.size(); ++i) v += child(i);
      break;
    case Kind::Row: {
      // Slot-positional: child i (MSB-first) occupies slot n-1-i.
      size_t n = t.children.size();
      for (size_t i = 0; i < n; ++i) v += child(i) << (n - 1 - i);
      break;
    }
    case Kind::Shl: v = child(0) << t.a; break;
    case Kind::Mul: v = child(0) * child(1); break;
    case Kind::FAs: v = (bit(0) + bit(1) + bit(2)) & 1; break;
    case Kind::FAc: v = (bit(0) + bit(1) + bit(2)) >> 1; break;
    case Kind::HAs: v = (bit(0) + bit(1)) & 1; break;
    case Kind::HAc: v = (bit(0) + bit(1)) >> 1; break;
  }
  memo.emplace(&t, v);
  return v;
}

}  // namespace

Wide eval(const TermPtr& t, const Env& env) {
  if (!t) throw EvalError("null term");
  std::unordered_map<const Term*, Wide> memo;
  return eval_rec(*t, env, memo);
}

namespace {

void collect_vars(const Term& t, std::unordered_set<const Term*>& seen,
                  std::vector<VarRef>& out) {
  if (!seen.insert(&t).second) return;
  if (t.kind == Kind::Var) out.push_back({t.var, t.a});
  for (const auto& c : t.children) collect_vars(*c, seen, out);
}

}  // namespace

std::vector<VarRef> free_vars(const TermPtr& t) {
  std::vector<VarRef> out;
  std::unordered_set<const Term*> seen;
  if (t) collect_vars(*t, seen, out);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

struct Parser {
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
    if (pos == start) throw ParseError("expected atom", start);
    return text.substr(start, pos - start);
  }

  TermPtr leaf(std::string_view a, size_t at) {
    if (a == "0") return mk_const(0);
    if (a == "1") return mk_const(1);
    size_t i = 0;
    while (i < a.size() && std::isalpha(static_cast<unsigned char>(a[i]))) ++i;
    std::string_view name = a.substr(0, i), digits = a.substr(i);
    if ((name == "p" || name == "q") && !digits.empty() &&
        std::all_of(digits.begin(), digits.end(),
                    [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      return mk_var(std::string(name), static_cast<uint32_t>(std::stoul(std::string(digits))));
    }
    throw ParseError("unknown atom '" + std::string(a) + "'", at);
  }

  TermPtr term() {
    skip_ws();
    if (pos >= text.size()) throw ParseError("unexpected end of input", pos);
    if (text[pos] != '(') {
      size_t at = pos;
      return leaf(atom(), at);
    }
    size_t open = pos++;
    skip_ws();
    size_t op_at = pos;
    std::string op(atom());

    Kind kind;
    uint32_t shift = 0;
    if (op.rfind("shl", 0) == 0 && op.size() > 3 &&
        std::all_of(op.begin() + 3, op.end(),
                    [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      kind = Kind::Shl;
      shift = static_cast<uint32_t>(std::stoul(op.substr(3)));
    } else if (op == "and") kind = Kind::And;
    else if (op == "or") kind = Kind::Or;
    else if (op == "xor") kind = Kind::Xor;
    else if (op == "not") kind = Kind::Not;
    else if (op == "add") kind = Kind::Add;
    else if (op == "row") kind = Kind::Row;
    else if (op == "sum") kind = Kind::Sum;
    else if (op == "mul") kind = Kind::Mul;
    else if (op == "fas") kind = Kind::FAs;
    else if (op == "fac") kind = Kind::FAc;
    else if (op == "has") kind = Kind::HAs;
    else if (op == "hac") kind = Kind::HAc;
    else throw ParseError("unknown operator '" + op + "'", op_at);

    std::vector<TermPtr> children;
    while (true) {
      skip_ws();
      if (pos >= text.size()) throw ParseError("missing ')'", open);
      if (text[pos] == ')') {
        ++pos;
        break;
      }
      children.push_back(term());
    }
    size_t n = children.size();
    if (n < kind_min_arity(kind) || n > kind_max_arity(kind))
      throw ParseError("'" + op + "' takes " + std::to_string(kind_min_arity(kind)) +
                           (kind_max_arity(kind) == SIZE_MAX ? "+" : "") +
                           " children, got " + std::to_string(n),
                       open);
    return mk_node(kind, std::move(children), shift);
  }
};

void serialize_rec(const Term& t, std::string& out) {
  switch (t.kind) {
    case Kind::Var:
      out += t.var;
      out += std::to_string(t.a);
      return;
    case Kind::Const:
      out += t.a ? '1' : '0';
      return;
    case Kind::Shl:
      out += "(shl";
      out += std::to_string(t.a);
      break;
    default:
      out += '(';
      out += kind_token(t.kind);
      break;
  }
  for (const auto& c : t.children) {
    out += ' ';
    serialize_rec(*c, out);
  }
  out += ')';
}

}  // namespace

TermPtr parse(std::string_view text) {
  Parser p{text};
  TermPtr t = p.term();
  p.skip_ws();
  if (p.pos != text.size()) throw ParseError("trailing input", p.pos);
  return t;
}

std::string serialize(const TermPtr& t) {
  if (!t) throw std::invalid_argument("null term");
  std::string out;
  serialize_rec(*t, out);
  return out;
}

namespace {

TermPtr subst_rec(const TermPtr& t,
                  const std::function<TermPtr(const std::string&, uint32_t)>& map_var,
                  std::unordered_map<const Term*, TermPtr>& memo) {
  auto it = memo.find(t.get());
  if (it != memo.end()) return it->second;
  TermPtr result;
  if (t->kind == Kind::Var) {
    result = map_var(t->var, t->a);
    if (!result) throw std::invalid_argument("substitute: unmapped variable " + t->var);
  } else {
    std::vector<TermPtr> children;
    children.reserve(t->children.size());
    bool changed = false;
    for (const auto& c : t->children) {
      children.push_back(subst_rec(c, map_var, memo));
      changed |= children.back() != c;
    }
    result = changed ? mk_node(t->kind, std::move(children), t->a, t->var) : t;
  }
  memo.emplace(t.get(), result);
  return result;
}

}  // namespace

TermPtr substitute(const TermPtr& t,
                   const std::function<TermPtr(const std::string&, uint32_t)>& map_var) {
  std::unordered_map<const Term*, TermPtr> memo;
  return subst_rec(t, map_var, memo);
}

}  // namespace optimult
