#pragma once

// Arithmetic-logic expression trees: single-bit variables and constants,
// Boolean gates, integer addition, positional rows, compressor cells.
// Terms are immutable values; eval gives every node an exact integer meaning.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace optimult {

enum class Kind : uint8_t {
  Var,    // single input bit, e.g. p2
  Const,  // constant bit 0/1
  And,
  Or,
  Xor,
  Not,
  Add,  // binary integer addition
  Row,  // positional container, children MSB-first, slot i weighs 2^i
  Sum,  // n-ary integer addition (n >= 2)
  Shl,  // value shifted left by a fixed amount
  Mul,  // unoptimized product placeholder
  FAs,  // full-adder sum:    (a+b+c) mod 2
  FAc,  // full-adder carry:  (a+b+c) div 2
  HAs,  // half-adder sum:    (a+b) mod 2
  HAc,  // half-adder carry:  (a+b) div 2
};

constexpr int kKindCount = 15;

const char* kind_token(Kind k);
bool kind_is_bit(Kind k);  // evaluation guaranteed in {0,1}
size_t kind_min_arity(Kind k);
size_t kind_max_arity(Kind k);

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Term {
  Kind kind;
  uint32_t a = 0;   // Var: bit index; Const: value; Shl: shift amount
  std::string var;  // Var: base name ("p", "q")
  std::vector<TermPtr> children;
};

// Checked constructors. All throw std::invalid_argument on arity violations.
TermPtr mk_node(Kind k, std::vector<TermPtr> children, uint32_t a = 0,
                std::string var = {});
TermPtr mk_var(std::string name, uint32_t index);
TermPtr mk_const(int value);
TermPtr mk_and(TermPtr x, TermPtr y);
TermPtr mk_or(TermPtr x, TermPtr y);
TermPtr mk_xor(TermPtr x, TermPtr y);
TermPtr mk_not(TermPtr x);
TermPtr mk_add(TermPtr x, TermPtr y);
TermPtr mk_row(std::vector<TermPtr> slots);
TermPtr mk_sum(std::vector<TermPtr> operands);
TermPtr mk_shl(TermPtr x, uint32_t amount);
TermPtr mk_mul(TermPtr x, TermPtr y);
TermPtr mk_fas(TermPtr a, TermPtr b, TermPtr c);
TermPtr mk_fac(TermPtr a, TermPtr b, TermPtr c);
TermPtr mk_has(TermPtr a, TermPtr b);
TermPtr mk_hac(TermPtr a, TermPtr b);

// Values fit comfortably in 128 bits for all supported widths (<= 16).
using Wide = unsigned __int128;

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, size_t position);
  size_t pos;
};

// Assignment of input bits: each base name maps to a fixed-width word.
class Env {
 public:
  void set(const std::string& name, uint32_t width, uint64_t value);
  int bit(const std::string& name, uint32_t index) const;  // throws EvalError
  // Standard multiplier/squarer assignment: p always, q unless square.
  static Env pq(uint32_t width, bool square, uint64_t p, uint64_t q);

 private:
  std::map<std::string, std::pair<uint32_t, uint64_t>> words_;
};

// Deterministic integer valuation. Shared subterms are evaluated once.
// Gate and compressor operands outside {0,1} raise EvalError.
Wide eval(const TermPtr& t, const Env& env);

struct VarRef {
  std::string name;
  uint32_t index;
  auto operator<=>(const VarRef&) const = default;
};

// Free variables, sorted by (name, index), deduplicated.
std::vector<VarRef> free_vars(const TermPtr& t);

// S-expression syntax: term := atom | "(" op term* ")" with ops
// and or xor not add row sum shl<k> mul fas fac has hac and atoms
// p<i>, q<i>, 0, 1. Row children are written MSB-first.
TermPtr parse(std::string_view text);
std::string serialize(const TermPtr& t);

// Replace every Var by map_var(name, index); sharing is preserved.
TermPtr substitute(const TermPtr& t,
                   const std::function<TermPtr(const std::string&, uint32_t)>& map_var);

}  // namespace optimult
