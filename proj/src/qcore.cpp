#include "roma/qcore.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "roma/error.hpp"
#include "roma/parallel.hpp"

namespace roma {
namespace {

void check_bit_width(int b) {
  if (b != 2 && b != 4) throw RomaError(ErrorCode::kValidation, "bit_width must be 2 or 4");
}

double row_dot(const QuantMatrix& m, int row, std::span<const AlignedBlock> blocks) {
  double acc = 0.0;
  for (int gi = 0; gi < m.groups_per_row(); ++gi) {
    acc += lunit_group_dot(blocks[gi], m.group(row, gi));
  }
  return acc;
}

}  // namespace

QuantGroup quantize_group(std::span<const double> weights, int bit_width) {
  check_bit_width(bit_width);
  if (weights.empty() || weights.size() > kGroupSize) {
    throw RomaError(ErrorCode::kValidation, "quantize_group: need 1..128 values");
  }
  // The range is extended to include zero so the zero point always lands
  // inside [0, qmax]; one-sided groups would otherwise clamp to garbage.
  double lo = 0.0, hi = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w)) throw RomaError(ErrorCode::kValidation, "quantize_group: non-finite input");
    lo = std::min(lo, w);
    hi = std::max(hi, w);
  }
  int qmax = (1 << bit_width) - 1;
  double s_real = (hi == lo) ? 1.0 : (hi - lo) / qmax;
  QuantGroup g;
  g.bit_width = static_cast<uint8_t>(bit_width);
  g.scale = fp16_encode(s_real);
  double s = fp16_decode(g.scale);
  auto clampq = [qmax](double v) {
    return static_cast<uint8_t>(std::clamp<long>(std::lround(v), 0, qmax));
  };
  g.zero = clampq(-lo / s);
  for (size_t i = 0; i < weights.size(); ++i) {
    g.weights[i] = clampq(weights[i] / s + g.zero);
  }
  for (size_t i = weights.size(); i < kGroupSize; ++i) g.weights[i] = g.zero;
  return g;
}

QuantMatrix quantize_matrix(int rows, int cols, std::span<const double> values, int bit_width) {
  if (rows < 1 || cols < 1 || values.size() != static_cast<size_t>(rows) * cols) {
    throw RomaError(ErrorCode::kValidation, "quantize_matrix: shape mismatch");
  }
  QuantMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.bit_width = bit_width;
  int gpr = m.groups_per_row();
  m.groups.reserve(static_cast<size_t>(rows) * gpr);
  for (int r = 0; r < rows; ++r) {
    for (int gi = 0; gi < gpr; ++gi) {
      int c0 = gi * kGroupSize;
      int len = std::min(kGroupSize, cols - c0);
      m.groups.push_back(quantize_group(values.subspan(static_cast<size_t>(r) * cols + c0, len), bit_width));
    }
  }
  return m;
}

double dequant_weight(const QuantGroup& g, int i) {
  return (static_cast<int>(g.weights[i]) - static_cast<int>(g.zero)) * fp16_decode(g.scale);
}

std::vector<double> dequant_row(const QuantMatrix& m, int row) {
  std::vector<double> out(m.cols);
  for (int c = 0; c < m.cols; ++c) {
    out[c] = dequant_weight(m.group(row, c / kGroupSize), c % kGroupSize);
  }
  return out;
}

double lunit_group_dot(const AlignedBlock& aligned, const QuantGroup& g) {
  if (aligned.n() != kGroupSize) {
    throw RomaError(ErrorCode::kValidation, "lunit_group_dot: aligned block must hold 128 values");
  }
  int64_t dot = 0;
  for (int k = 0; k < kGroupSize; ++k) {
    dot += static_cast<int64_t>(aligned.values[k]) * g.weights[k];
  }
  int64_t ipart = dot - aligned.vsum * g.zero;
  assert(ipart > -(int64_t{1} << kDotWidthBits) &&
         ipart < (int64_t{1} << kDotWidthBits));  // fits a 32-bit accumulator
  // Exact in double: |ipart| < 2^23 and the fp16 scale has an 11-bit
  // significand, so the product needs at most 34 bits.
  return static_cast<double>(ipart) * fp16_decode(g.scale) *
         std::exp2(aligned.max_exp - kFp16Bias - kFp16MantBits);
}

std::vector<AlignedBlock> align_activation_blocks(std::span<const Fp16> acts, int cols) {
  if (static_cast<int>(acts.size()) != cols) {
    throw RomaError(ErrorCode::kValidation, "activation length does not match matrix columns");
  }
  int nblocks = (cols + kGroupSize - 1) / kGroupSize;
  std::vector<AlignedBlock> blocks;
  blocks.reserve(nblocks);
  std::vector<Fp16> padded(kGroupSize);
  for (int bi = 0; bi < nblocks; ++bi) {
    int c0 = bi * kGroupSize;
    int len = std::min(kGroupSize, cols - c0);
    if (len == kGroupSize) {
      blocks.push_back(align_block(acts.subspan(c0, kGroupSize)));
    } else {
      std::fill(padded.begin(), padded.end(), Fp16{0});
      std::copy_n(acts.begin() + c0, len, padded.begin());
      blocks.push_back(align_block(padded));
    }
  }
  return blocks;
}

std::vector<double> lunit_matvec(const QuantMatrix& m, std::span<const Fp16> acts) {
  auto blocks = align_activation_blocks(acts, m.cols);
  std::vector<double> out(m.rows);
  // Rows are independent; per-row accumulation order is unchanged, so the
  // result matches the serial reference bit for bit.
#pragma omp parallel for schedule(static) num_threads(sim_thread_count()) \
    if (static_cast<int64_t>(m.rows) * m.cols > 1 << 16)
  for (int r = 0; r < m.rows; ++r) {
    out[r] = row_dot(m, r, blocks);
  }
  return out;
}

std::vector<double> lunit_matvec_ref(const QuantMatrix& m, std::span<const Fp16> acts) {
  auto blocks = align_activation_blocks(acts, m.cols);
  std::vector<double> out(m.rows);
  for (int r = 0; r < m.rows; ++r) {
    out[r] = row_dot(m, r, blocks);
  }
  return out;
}

namespace {

std::vector<double> lora_mid(const LoraPair& lora, std::span<const Fp16> acts) {
  if (lora.a.cols != static_cast<int>(acts.size()) || lora.a.rows != lora.rank ||
      lora.b.cols != lora.rank) {
    throw RomaError(ErrorCode::kValidation, "lora matvec: shape mismatch");
  }
  std::vector<double> x(acts.size());
  for (size_t i = 0; i < acts.size(); ++i) x[i] = fp16_decode(acts[i]);
  std::vector<double> mid(lora.rank, 0.0);
  for (int r = 0; r < lora.rank; ++r) {
    double acc = 0.0;
    for (int c = 0; c < lora.a.cols; ++c) {
      acc += fp8_decode(lora.a.at(r, c), lora.a.format) * x[c];
    }
    mid[r] = acc;
  }
  return mid;
}

}  // namespace

std::vector<double> hunit_lora_matvec(const LoraPair& lora, std::span<const Fp16> acts) {
  if (lora.rank == 0) return std::vector<double>(lora.b.rows, 0.0);
  auto mid = lora_mid(lora, acts);
  std::vector<double> out(lora.b.rows, 0.0);
#pragma omp parallel for schedule(static) num_threads(sim_thread_count()) \
    if (static_cast<int64_t>(lora.b.rows) * lora.rank > 1 << 16)
  for (int r = 0; r < lora.b.rows; ++r) {
    double acc = 0.0;
    for (int k = 0; k < lora.rank; ++k) {
      acc += fp8_decode(lora.b.at(r, k), lora.b.format) * mid[k];
    }
    out[r] = acc;
  }
  return out;
}

std::vector<double> hunit_lora_matvec_ref(const LoraPair& lora, std::span<const Fp16> acts) {
  if (lora.rank == 0) return std::vector<double>(lora.b.rows, 0.0);
  auto mid = lora_mid(lora, acts);
  std::vector<double> out(lora.b.rows, 0.0);
  for (int r = 0; r < lora.b.rows; ++r) {
    double acc = 0.0;
    for (int k = 0; k < lora.rank; ++k) {
      acc += fp8_decode(lora.b.at(r, k), lora.b.format) * mid[k];
    }
    out[r] = acc;
  }
  return out;
}

}  // namespace roma
