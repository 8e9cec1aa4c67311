#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "roma/fp16.hpp"

namespace roma {

// Right-shift behavior of the alignment step. The hardware form truncates
// the shifted magnitude toward zero; nearest rounding is kept as a variant.
enum class AlignRounding { kTruncate, kNearest };

// Shared-exponent integer view of an fp16 block. Each element satisfies
// |values[k]| <= 2047 and represents values[k] * 2^(max_exp - 25) up to
// one unit of shift truncation.
struct AlignedBlock {
  std::vector<int32_t> values;
  int max_exp = 0;   // max raw exponent field over nonzero inputs, 0 if all zero
  int64_t vsum = 0;  // exact sum of values
  size_t n() const { return values.size(); }
};

// Converts fp16 activations to sign-magnitude integers under the block's
// max exponent:
//   vconv = +-{1,mantissa} for normals, +-{mantissa,0} for denormals
//   value_k = vconv_k >> (max_exp - exp_k)   (magnitude shift, sign reapplied)
// Rejects NaN/Inf and empty input.
AlignedBlock align_block(std::span<const Fp16> acts,
                         AlignRounding rounding = AlignRounding::kTruncate);

}  // namespace roma
