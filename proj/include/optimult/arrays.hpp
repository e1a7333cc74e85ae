#pragma once

// Initial AND-array construction for n-bit multipliers and squarers.

#include <cstdint>
#include <vector>

#include "optimult/term.hpp"

namespace optimult {

struct ArraySpec {
  uint32_t width = 2;   // operand bits, >= 2
  bool square = false;  // p*p instead of p*q
  uint32_t output_width() const { return 2 * width; }
};

// Sum of `width` rows; row j holds the partial products of multiplicand
// bit j, MSB-first, with j trailing constant-0 slots encoding the shift.
// For squarers q is identified with p: diagonal products fold to p_i and
// symmetric products are emitted in one canonical operand order so that
// hash-consing merges them.
TermPtr build_and_array(const ArraySpec& spec);

// Left-pad each row with constant-0 MSB slots to target_len. Values are
// unchanged; rows longer than target_len are rejected.
std::vector<TermPtr> pad_rows(const std::vector<TermPtr>& rows, size_t target_len);

}  // namespace optimult
