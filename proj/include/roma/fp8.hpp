#pragma once

#include <cstdint>

namespace roma {

// 8-bit float. E4M3 (bias 7, no Inf, mantissa-all-ones at top exponent is
// NaN, max finite 448) is the default; E5M2 (bias 15, IEEE-style Inf/NaN,
// max finite 57344) is selectable.
enum class Fp8Format { kE4M3, kE5M2 };

struct Fp8 {
  uint8_t bits = 0;
  friend bool operator==(Fp8 a, Fp8 b) { return a.bits == b.bits; }
};

bool fp8_is_nan(Fp8 v, Fp8Format fmt = Fp8Format::kE4M3);
bool fp8_is_inf(Fp8 v, Fp8Format fmt = Fp8Format::kE4M3);

// Exact value of a finite fp8 pattern. Rejects NaN (and Inf for E5M2).
double fp8_decode(Fp8 v, Fp8Format fmt = Fp8Format::kE4M3);

// Round-to-nearest-even encode; out-of-range magnitudes saturate to the
// max finite value and set *saturated when provided.
Fp8 fp8_encode(double x, Fp8Format fmt = Fp8Format::kE4M3, bool* saturated = nullptr);

}  // namespace roma
