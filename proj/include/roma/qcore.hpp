#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "roma/align.hpp"
#include "roma/fp16.hpp"
#include "roma/fp8.hpp"

namespace roma {

inline constexpr int kGroupSize = 128;
inline constexpr int kDotWidthBits = 23;  // |dot - vsum*z| stays below 2^23

// One quantization group: 128 B-bit weights sharing an fp16 scale and a
// B-bit zero point. Real weight value = (w - z) * s.
struct QuantGroup {
  Fp16 scale;
  uint8_t zero = 0;
  uint8_t bit_width = 4;  // 2 or 4
  std::array<uint8_t, kGroupSize> weights{};
};

struct QuantMatrix {
  int rows = 0;
  int cols = 0;
  int bit_width = 4;
  std::vector<QuantGroup> groups;  // row-major, ceil(cols/128) per row

  int groups_per_row() const { return (cols + kGroupSize - 1) / kGroupSize; }
  const QuantGroup& group(int row, int gi) const { return groups[static_cast<size_t>(row) * groups_per_row() + gi]; }
};

// Low-rank adapter pair in fp8: y = b * (a * x), a is rank x cols,
// b is rows x rank.
struct Fp8Matrix {
  int rows = 0;
  int cols = 0;
  Fp8Format format = Fp8Format::kE4M3;
  std::vector<Fp8> data;  // row-major

  Fp8 at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
};

struct LoraPair {
  Fp8Matrix a;  // rank x cols
  Fp8Matrix b;  // rows x rank
  int rank = 0;
};

// Asymmetric min-max quantization of up to 128 values. Shorter spans are
// padded with w = z so the padding dequantizes to exactly zero.
QuantGroup quantize_group(std::span<const double> weights, int bit_width);

QuantMatrix quantize_matrix(int rows, int cols, std::span<const double> values, int bit_width);

double dequant_weight(const QuantGroup& g, int i);
std::vector<double> dequant_row(const QuantMatrix& m, int row);

// Group dot product: (sum_k value_k * w_k - vsum * z) * s * 2^(max_exp - 25).
// The integer part is exact; the 2^-10 term renormalizes the 11-bit
// fixed-point form the alignment step produces. Requires aligned.n() == 128.
double lunit_group_dot(const AlignedBlock& aligned, const QuantGroup& g);

// Activations aligned once per 128-column block, shared by every row.
std::vector<AlignedBlock> align_activation_blocks(std::span<const Fp16> acts, int cols);

// Quantized matrix-vector product through the alignment + group-dot path.
// Per-row group accumulation is left-to-right in double, so the parallel
// kernel and the serial reference are bit-identical.
std::vector<double> lunit_matvec(const QuantMatrix& m, std::span<const Fp16> acts);
std::vector<double> lunit_matvec_ref(const QuantMatrix& m, std::span<const Fp16> acts);

// fp8 low-rank path: b * (a * x) with exact fp8/fp16 decodes and fixed
// left-to-right double accumulation.
std::vector<double> hunit_lora_matvec(const LoraPair& lora, std::span<const Fp16> acts);
std::vector<double> hunit_lora_matvec_ref(const LoraPair& lora, std::span<const Fp16> acts);

}  // namespace roma
