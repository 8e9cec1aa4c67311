#pragma once

#include <cstdint>

namespace roma {

// IEEE binary16: 1 sign, 5 exponent (bias 15), 10 mantissa.
struct Fp16 {
  uint16_t bits = 0;
  friend bool operator==(Fp16 a, Fp16 b) { return a.bits == b.bits; }
};

inline constexpr int kFp16Bias = 15;
inline constexpr int kFp16MantBits = 10;

inline int fp16_sign(Fp16 h) { return (h.bits >> 15) & 1; }
inline int fp16_exp_field(Fp16 h) { return (h.bits >> 10) & 0x1F; }
inline int fp16_mant_field(Fp16 h) { return h.bits & 0x3FF; }
inline bool fp16_is_nan(Fp16 h) { return fp16_exp_field(h) == 31 && fp16_mant_field(h) != 0; }
inline bool fp16_is_inf(Fp16 h) { return fp16_exp_field(h) == 31 && fp16_mant_field(h) == 0; }
inline bool fp16_is_zero(Fp16 h) { return (h.bits & 0x7FFF) == 0; }

// Exact value of a finite half. Every binary16 value is representable in
// double, so the result is the true rational value. Rejects NaN/Inf.
double fp16_decode(Fp16 h);

// Round-to-nearest-even encode. Rejects NaN/Inf inputs and magnitudes
// that round beyond the largest finite half (65504).
Fp16 fp16_encode(double x);

}  // namespace roma
