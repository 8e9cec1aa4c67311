#include "roma/fp16.hpp"

#include <bit>
#include <cmath>

#include "roma/error.hpp"

namespace roma {
namespace {

// Shift right with round-to-nearest, ties-to-even.
uint64_t rshift_rne(uint64_t v, int s) {
  if (s <= 0) return v << (-s);
  if (s > 60) return 0;
  uint64_t q = v >> s;
  uint64_t rem = v & ((uint64_t{1} << s) - 1);
  uint64_t half = uint64_t{1} << (s - 1);
  if (rem > half || (rem == half && (q & 1))) ++q;
  return q;
}

}  // namespace

double fp16_decode(Fp16 h) {
  int e = fp16_exp_field(h);
  int m = fp16_mant_field(h);
  if (e == 31) {
    throw RomaError(ErrorCode::kValidation,
                    m ? "fp16 decode: NaN input rejected" : "fp16 decode: Inf input rejected");
  }
  // Denormal: m * 2^-24. Normal: (1024 + m) * 2^(e - 25).
  double mag = (e == 0) ? std::ldexp(static_cast<double>(m), -24)
                        : std::ldexp(static_cast<double>(1024 + m), e - 25);
  return fp16_sign(h) ? -mag : mag;
}

Fp16 fp16_encode(double x) {
  uint64_t db = std::bit_cast<uint64_t>(x);
  uint16_t sign = static_cast<uint16_t>((db >> 48) & 0x8000);
  int dexp = static_cast<int>((db >> 52) & 0x7FF);
  uint64_t dfrac = db & ((uint64_t{1} << 52) - 1);

  if (dexp == 0x7FF) {
    throw RomaError(ErrorCode::kValidation, "fp16 encode: non-finite input");
  }
  if ((db & ~(uint64_t{1} << 63)) == 0) return Fp16{sign};  // +-0

  // 53-bit significand and unbiased exponent of |x| = mant * 2^(e-52).
  uint64_t mant = dfrac | (dexp ? (uint64_t{1} << 52) : 0);
  int e = dexp ? dexp - 1023 : -1022;
  if (!dexp) {
    // Double denormals are below 2^-1022, far under half of the smallest
    // half denormal; they round to zero.
    return Fp16{sign};
  }

  if (e >= -14) {
    // Normal target: 11-bit significand in [1024, 2047].
    uint64_t sig = rshift_rne(mant, 42);
    if (sig == 2048) {
      sig = 1024;
      ++e;
    }
    if (e > 15) {
      throw RomaError(ErrorCode::kValidation, "fp16 encode: magnitude exceeds max finite half");
    }
    return Fp16{static_cast<uint16_t>(sign | ((e + 15) << 10) | (sig - 1024))};
  }

  // Denormal target: units of 2^-24.
  uint64_t sig = rshift_rne(mant, 28 - e);
  // sig == 1024 means it rounded up to the smallest normal; the bit
  // pattern 0x0400 encodes exactly that.
  return Fp16{static_cast<uint16_t>(sign | sig)};
}

}  // namespace roma
