#include "optimult/arrays.hpp"

#include <stdexcept>

namespace optimult {

namespace {

// Partial product p_i * q_j. In squarer mode the diagonal folds to p_i and
// the symmetric pair (i,j)/(j,i) uses the higher index first so both sides
// produce the identical term.
TermPtr partial_product(const ArraySpec& spec, uint32_t i, uint32_t j) {
  if (!spec.square) return mk_and(mk_var("p", i), mk_var("q", j));
  if (i == j) return mk_var("p", i);
  uint32_t hi = std::max(i, j), lo = std::min(i, j);
  return mk_and(mk_var("p", hi), mk_var("p", lo));
}

}  // namespace

TermPtr build_and_array(const ArraySpec& spec) {
  if (spec.width < 2) throw std::invalid_argument("operand width must be >= 2");
  std::vector<TermPtr> rows;
  rows.reserve(spec.width);
  for (uint32_t j = 0; j < spec.width; ++j) {
    std::vector<TermPtr> slots;
    slots.reserve(spec.width + j);
    for (uint32_t i = spec.width; i-- > 0;) slots.push_back(partial_product(spec, i, j));
    for (uint32_t k = 0; k < j; ++k) slots.push_back(mk_const(0));
    rows.push_back(mk_row(std::move(slots)));
  }
  return mk_sum(std::move(rows));
}

std::vector<TermPtr> pad_rows(const std::vector<TermPtr>& rows, size_t target_len) {
  std::vector<TermPtr> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    if (!r || r->kind != Kind::Row) throw std::invalid_argument("pad_rows: not a row");
    if (r->children.size() > target_len)
      throw std::invalid_argument("pad_rows: row longer than target");
    if (r->children.size() == target_len) {
      out.push_back(r);
      continue;
    }
    std::vector<TermPtr> slots(target_len - r->children.size(), mk_const(0));
    slots.insert(slots.end(), r->children.begin(), r->children.end());
    out.push_back(mk_row(std::move(slots)));
  }
  return out;
}

}  // namespace optimult
