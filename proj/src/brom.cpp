#include "roma/brom.hpp"

#include <algorithm>
#include <cassert>

#include "roma/error.hpp"
#include "roma/parallel.hpp"

namespace roma {
namespace {

void check_dims(int depth, int width) {
  if (depth < 1 || width < 1) throw RomaError(ErrorCode::kValidation, "rom: depth and width must be >= 1");
}

void check_addr(int addr, int depth) {
  if (addr < 0 || addr >= depth) throw RomaError(ErrorCode::kValidation, "rom: address out of range");
}

bool words_equal(const std::vector<uint64_t>& a, const uint64_t* b, int n) {
  for (int i = 0; i < n; ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

bool check_one_address(const RomContents& rom, const BRomArray& brom, int addr) {
  auto std_word = rom_read_standard(rom, addr);
  auto brom_word = rom_read_brom(brom, addr);
  return std_word == brom_word && words_equal(std_word, rom.row(addr), rom.words_per_row);
}

}  // namespace

RomContents RomContents::zeros(int depth, int width) {
  check_dims(depth, width);
  RomContents r;
  r.depth = depth;
  r.width = width;
  r.words_per_row = (width + 63) / 64;
  r.words.assign(static_cast<size_t>(depth) * r.words_per_row, 0);
  return r;
}

RomContents RomContents::random(int depth, int width, std::mt19937_64& rng) {
  RomContents r = zeros(depth, width);
  uint64_t top_mask = (width % 64) ? ((uint64_t{1} << (width % 64)) - 1) : ~uint64_t{0};
  for (int i = 0; i < depth; ++i) {
    for (int w = 0; w < r.words_per_row; ++w) {
      uint64_t v = rng();
      if (w + 1 == r.words_per_row) v &= top_mask;
      r.words[static_cast<size_t>(i) * r.words_per_row + w] = v;
    }
  }
  return r;
}

void RomContents::set_bit(int addr, int col, bool v) {
  uint64_t& w = words[static_cast<size_t>(addr) * words_per_row + col / 64];
  uint64_t m = uint64_t{1} << (col % 64);
  w = v ? (w | m) : (w & ~m);
}

std::vector<uint64_t> rom_read_standard(const RomContents& rom, int addr) {
  check_addr(addr, rom.depth);
  // Address decoder: one-hot word lines.
  std::vector<uint8_t> onehot(rom.depth, 0);
  onehot[addr] = 1;
  // R_j = OR over every word line of (A_i & M_ij), all W columns in parallel.
  std::vector<uint64_t> out(rom.words_per_row, 0);
  for (int i = 0; i < rom.depth; ++i) {
    uint64_t gate = onehot[i] ? ~uint64_t{0} : 0;
    const uint64_t* row = rom.row(i);
    for (int w = 0; w < rom.words_per_row; ++w) {
      out[w] |= gate & row[w];
    }
  }
  return out;
}

BRomArray build_brom(const RomContents& contents, int num_cgen) {
  BRomArray b;
  b.orig_depth = contents.depth;
  b.num_cgen = num_cgen;
  int padded = ((contents.depth + kBromBlock - 1) / kBromBlock) * kBromBlock;
  if (padded == contents.depth) {
    b.contents = contents;
  } else {
    b.contents = RomContents::zeros(padded, contents.width);
    std::copy(contents.words.begin(), contents.words.end(), b.contents.words.begin());
  }
  b.column_codes.assign(static_cast<size_t>(b.blocks()) * contents.width, 0);
  for (int blk = 0; blk < b.blocks(); ++blk) {
    for (int j = 0; j < contents.width; ++j) {
      uint8_t code = 0;
      for (int i = 0; i < kBromBlock; ++i) {
        code |= static_cast<uint8_t>(b.contents.bit(blk * kBromBlock + i, j)) << i;
      }
      b.column_codes[static_cast<size_t>(blk) * contents.width + j] = code;
    }
  }
  return b;
}

std::array<bool, 16> cgen_candidates(const std::array<bool, 4>& onehot4) {
  assert(onehot4[0] + onehot4[1] + onehot4[2] + onehot4[3] <= 1);
  std::array<bool, 16> c{};
  for (int k = 0; k < 16; ++k) {
    bool v = false;
    for (int i = 0; i < 4; ++i) {
      v = v || (onehot4[i] && ((k >> i) & 1));
    }
    c[k] = v;
  }
  return c;
}

std::vector<uint64_t> rom_read_brom(const BRomArray& brom, int addr) {
  check_addr(addr, brom.orig_depth);
  int blk = addr / kBromBlock;
  std::array<bool, 4> onehot{};
  onehot[addr % kBromBlock] = true;
  auto cand = cgen_candidates(onehot);
  std::vector<uint64_t> out(brom.contents.words_per_row, 0);
  for (int j = 0; j < brom.contents.width; ++j) {
    if (cand[brom.code(blk, j)]) out[j / 64] |= uint64_t{1} << (j % 64);
  }
  return out;
}

int64_t transistor_count(RomKind kind, int64_t depth, int64_t width, int num_cgen) {
  if (depth < 1 || width < 1) throw RomaError(ErrorCode::kValidation, "transistor_count: bad dims");
  if (kind == RomKind::kStandard) return depth * width;
  if (depth % kBromBlock != 0) {
    throw RomaError(ErrorCode::kValidation, "transistor_count: block form needs depth % 4 == 0");
  }
  return (depth / kBromBlock) * (width + num_cgen);
}

bool check_equivalence(const RomContents& rom, const BRomArray& brom) {
  bool ok = true;
#pragma omp parallel for schedule(static) num_threads(sim_thread_count()) reduction(&& : ok)
  for (int addr = 0; addr < rom.depth; ++addr) {
    ok = ok && check_one_address(rom, brom, addr);
  }
  return ok;
}

bool check_equivalence_serial(const RomContents& rom, const BRomArray& brom) {
  for (int addr = 0; addr < rom.depth; ++addr) {
    if (!check_one_address(rom, brom, addr)) return false;
  }
  return true;
}

CellAreaModel CellAreaModel::defaults(int64_t width, int num_cgen) {
  CellAreaModel m;
  m.demand[static_cast<int>(CellKind::kSramBit)] = {3.0, 0.45};
  m.demand[static_cast<int>(CellKind::kRomBit)] = {1.0, 0.15};
  // Base layer shrinks with the transistor count; routing quadruples
  // because each block fans out four word lines worth of candidates.
  m.demand[static_cast<int>(CellKind::kBromBit)] = {brom_transistor_ratio(width, num_cgen), 0.60};
  m.demand[static_cast<int>(CellKind::kCompute)] = {0.60, 0.15};
  return m;
}

FusedAreaResult fused_area(const CellAreaModel& model, const std::array<double, kNumCellKinds>& counts) {
  for (const auto& d : model.demand) {
    if (d.base <= 0.0 || d.metal <= 0.0) {
      throw RomaError(ErrorCode::kValidation, "fused_area: demands must be positive");
    }
  }
  double base_sum = 0.0, metal_sum = 0.0, separate = 0.0;
  for (int k = 0; k < kNumCellKinds; ++k) {
    double b = counts[k] * model.demand[k].base / model.base_util;
    double mtl = counts[k] * model.demand[k].metal / model.metal_util;
    base_sum += b;
    metal_sum += mtl;
    separate += std::max(b, mtl);
  }
  FusedAreaResult r;
  r.separate = separate;
  r.fused = std::max(base_sum, metal_sum);
  if (r.fused > 0.0) {
    r.base_utilization = base_sum / r.fused;
    r.metal_utilization = metal_sum / r.fused;
  }
  return r;
}

AreaComparison lunit_area_comparison(const CellAreaModel& model, int64_t depth, int64_t width) {
  double nbits = static_cast<double>(depth) * static_cast<double>(width);
  auto macro = [&](CellKind k, double count) {
    const LayerDemand& d = model.of(k);
    return count * std::max(d.base / model.base_util, d.metal / model.metal_util);
  };
  AreaComparison cmp;
  // One compute cell per stored bit: the MAC array is commensurate with
  // the weight array it consumes.
  double compute = macro(CellKind::kCompute, nbits);
  cmp.sram_compute = macro(CellKind::kSramBit, nbits) + compute;
  cmp.rom_compute = macro(CellKind::kRomBit, nbits) + compute;
  cmp.brom_compute = macro(CellKind::kBromBit, nbits) + compute;
  std::array<double, kNumCellKinds> counts{};
  counts[static_cast<int>(CellKind::kBromBit)] = nbits;
  counts[static_cast<int>(CellKind::kCompute)] = nbits;
  cmp.fused = fused_area(model, counts).fused;
  return cmp;
}

}  // namespace roma
