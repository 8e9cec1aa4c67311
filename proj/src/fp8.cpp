#include "roma/fp8.hpp"

#include <bit>
#include <cmath>

#include "roma/error.hpp"

namespace roma {
namespace {

struct Layout {
  int mbits;
  int bias;
  int max_exp;        // largest unbiased exponent carrying finite values
  int max_mant_top;   // largest mantissa field at max_exp
  uint8_t max_finite; // bit pattern of the largest finite magnitude
};

Layout layout_of(Fp8Format fmt) {
  if (fmt == Fp8Format::kE4M3) return {3, 7, 8, 6, 0x7E};   // max finite 448
  return {2, 15, 15, 3, 0x7B};                              // E5M2, max finite 57344
}

uint64_t rshift_rne(uint64_t v, int s) {
  if (s <= 0) return v << (-s);
  if (s > 60) return 0;
  uint64_t q = v >> s;
  uint64_t rem = v & ((uint64_t{1} << s) - 1);
  uint64_t half = uint64_t{1} << (s - 1);
  if (rem > half || (rem == half && (q & 1))) ++q;
  return q;
}

int exp_field(Fp8 v, const Layout& lo) { return (v.bits >> lo.mbits) & ((1 << (7 - lo.mbits)) - 1); }
int mant_field(Fp8 v, const Layout& lo) { return v.bits & ((1 << lo.mbits) - 1); }

}  // namespace

bool fp8_is_nan(Fp8 v, Fp8Format fmt) {
  Layout lo = layout_of(fmt);
  if (fmt == Fp8Format::kE4M3) return (v.bits & 0x7F) == 0x7F;
  return exp_field(v, lo) == 31 && mant_field(v, lo) != 0;
}

bool fp8_is_inf(Fp8 v, Fp8Format fmt) {
  if (fmt == Fp8Format::kE4M3) return false;  // E4M3 has no infinities
  Layout lo = layout_of(fmt);
  return exp_field(v, lo) == 31 && mant_field(v, lo) == 0;
}

double fp8_decode(Fp8 v, Fp8Format fmt) {
  if (fp8_is_nan(v, fmt)) throw RomaError(ErrorCode::kValidation, "fp8 decode: NaN input rejected");
  if (fp8_is_inf(v, fmt)) throw RomaError(ErrorCode::kValidation, "fp8 decode: Inf input rejected");
  Layout lo = layout_of(fmt);
  int e = exp_field(v, lo);
  int m = mant_field(v, lo);
  double mag = (e == 0)
                   ? std::ldexp(static_cast<double>(m), 1 - lo.bias - lo.mbits)
                   : std::ldexp(static_cast<double>((1 << lo.mbits) + m), e - lo.bias - lo.mbits);
  return (v.bits & 0x80) ? -mag : mag;
}

Fp8 fp8_encode(double x, Fp8Format fmt, bool* saturated) {
  if (saturated) *saturated = false;
  Layout lo = layout_of(fmt);

  uint64_t db = std::bit_cast<uint64_t>(x);
  uint8_t sign = static_cast<uint8_t>((db >> 56) & 0x80);
  int dexp = static_cast<int>((db >> 52) & 0x7FF);
  uint64_t dfrac = db & ((uint64_t{1} << 52) - 1);

  if (dexp == 0x7FF) throw RomaError(ErrorCode::kValidation, "fp8 encode: non-finite input");
  if ((db & ~(uint64_t{1} << 63)) == 0) return Fp8{sign};
  if (!dexp) return Fp8{sign};  // double denormals underflow to zero

  uint64_t mant = dfrac | (uint64_t{1} << 52);
  int e = dexp - 1023;
  int min_normal_exp = 1 - lo.bias;

  auto saturate = [&] {
    if (saturated) *saturated = true;
    return Fp8{static_cast<uint8_t>(sign | lo.max_finite)};
  };
  if (e > lo.max_exp) return saturate();

  if (e >= min_normal_exp) {
    uint64_t sig = rshift_rne(mant, 52 - lo.mbits);  // (mbits+1)-bit significand
    if (sig == (uint64_t{2} << lo.mbits)) {
      sig >>= 1;
      ++e;
    }
    int m = static_cast<int>(sig) - (1 << lo.mbits);
    if (e > lo.max_exp || (e == lo.max_exp && m > lo.max_mant_top)) return saturate();
    return Fp8{static_cast<uint8_t>(sign | ((e + lo.bias) << lo.mbits) | m)};
  }

  // Denormal target: units of 2^(1 - bias - mbits).
  uint64_t sig = rshift_rne(mant, 53 - lo.bias - lo.mbits - e);
  // sig == 1<<mbits rounds up into the smallest normal, whose pattern this is.
  return Fp8{static_cast<uint8_t>(sign | sig)};
}

}  // namespace roma
