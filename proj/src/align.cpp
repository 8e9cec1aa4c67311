#include "roma/align.hpp"

#include "roma/error.hpp"

namespace roma {

AlignedBlock align_block(std::span<const Fp16> acts, AlignRounding rounding) {
  if (acts.empty()) throw RomaError(ErrorCode::kValidation, "align_block: empty input");

  int max_exp = 0;
  for (Fp16 h : acts) {
    if (fp16_exp_field(h) == 31) {
      throw RomaError(ErrorCode::kValidation, "align_block: NaN/Inf input rejected");
    }
    if (!fp16_is_zero(h) && fp16_exp_field(h) > max_exp) max_exp = fp16_exp_field(h);
  }

  AlignedBlock out;
  out.max_exp = max_exp;
  out.values.reserve(acts.size());
  for (Fp16 h : acts) {
    int e = fp16_exp_field(h);
    int m = fp16_mant_field(h);
    // Step 1: 11-bit magnitude. Normals carry the implicit bit; denormals
    // are doubled so the uniform shift rule below stays exact at exp 0.
    int32_t mag = (e != 0) ? (1024 + m) : (m << 1);
    int shift = max_exp - e;  // 0..30
    // Step 2: shift the magnitude, reapply the sign (truncation toward zero).
    int32_t v;
    if (rounding == AlignRounding::kTruncate) {
      v = mag >> shift;
    } else {
      v = (mag + (shift ? (1 << (shift - 1)) : 0)) >> shift;
    }
    if (fp16_sign(h)) v = -v;
    out.values.push_back(v);
    out.vsum += v;
  }
  return out;
}

}  // namespace roma
