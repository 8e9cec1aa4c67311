#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

namespace roma {

inline constexpr int kBromBlock = 4;
// One transistor per OR input across the 16 candidates: sum of popcount(k)
// for k in 0..15. The value is a parameter; this default is our derivation.
inline constexpr int kDefaultNumCgen = 32;

// D x W bit array, rows packed into 64-bit words so the OR planes can be
// evaluated word-parallel, the way the hardware evaluates all W columns
// at once.
struct RomContents {
  int depth = 0;
  int width = 0;
  int words_per_row = 0;
  std::vector<uint64_t> words;  // row-major

  static RomContents zeros(int depth, int width);
  static RomContents random(int depth, int width, std::mt19937_64& rng);

  bool bit(int addr, int col) const {
    return (words[static_cast<size_t>(addr) * words_per_row + col / 64] >> (col % 64)) & 1;
  }
  void set_bit(int addr, int col, bool v);
  const uint64_t* row(int addr) const { return words.data() + static_cast<size_t>(addr) * words_per_row; }
};

// Block-ROM view: addresses grouped in fours, one 4-bit column code per
// (block, column) selecting among the 16 pre-generated candidates.
struct BRomArray {
  RomContents contents;  // depth padded to a multiple of 4 with zero words
  int orig_depth = 0;
  int num_cgen = kDefaultNumCgen;
  std::vector<uint8_t> column_codes;  // [block * width + col]

  int blocks() const { return contents.depth / kBromBlock; }
  uint8_t code(int block, int col) const { return column_codes[static_cast<size_t>(block) * contents.width + col]; }
};

BRomArray build_brom(const RomContents& contents, int num_cgen = kDefaultNumCgen);

// Standard ROM read: address to one-hot lines, then R_j = OR_i(A_i & M_ij),
// evaluated through the full OR reduction rather than by indexing.
std::vector<uint64_t> rom_read_standard(const RomContents& rom, int addr);

// The 16 per-block candidates: C_k = OR_{i=0..3}(A_i & bit_i(k)).
std::array<bool, 16> cgen_candidates(const std::array<bool, 4>& onehot4);

// B-ROM read: within-block one-hot lines feed CGen; output bit j selects
// candidate C_{code(block, j)}.
std::vector<uint64_t> rom_read_brom(const BRomArray& brom, int addr);

enum class RomKind { kStandard, kBrom };

// Array transistor counts (decoder excluded): standard D*W, block form
// (D/4) * (W + num_cgen).
int64_t transistor_count(RomKind kind, int64_t depth, int64_t width, int num_cgen = kDefaultNumCgen);

inline double brom_transistor_ratio(int64_t width, int num_cgen = kDefaultNumCgen) {
  return static_cast<double>(width + num_cgen) / (4.0 * static_cast<double>(width));
}

// Sweeps every address of both read paths against direct indexing.
// Parallel over addresses; the serial form is the testing reference.
bool check_equivalence(const RomContents& rom, const BRomArray& brom);
bool check_equivalence_serial(const RomContents& rom, const BRomArray& brom);

// ---------------------------------------------------------------------------
// Two-resource area model: every cell kind demands base-layer (transistor)
// and metal-layer (routing) area; a macro is as large as its most demanded
// layer. Fusing complementary cells shares the slack.

struct LayerDemand {
  double base = 0.0;
  double metal = 0.0;
};

enum class CellKind { kSramBit = 0, kRomBit = 1, kBromBit = 2, kCompute = 3 };
inline constexpr int kNumCellKinds = 4;

struct CellAreaModel {
  std::array<LayerDemand, kNumCellKinds> demand{};  // per cell, by CellKind
  double base_util = 1.0;
  double metal_util = 1.0;

  // Defaults, normalized to a standard ROM bitcell area of 1:
  //   SRAM bit 3x ROM bit; B-ROM base shrinks by the transistor ratio while
  //   its routing demand is 4x the standard cell's; the compute cell is the
  //   complementary shape (base-heavy, routing-light).
  static CellAreaModel defaults(int64_t width = 512, int num_cgen = kDefaultNumCgen);

  const LayerDemand& of(CellKind k) const { return demand[static_cast<int>(k)]; }
};

struct FusedAreaResult {
  double separate = 0.0;      // one macro per cell kind
  double fused = 0.0;         // all cells in one macro
  double base_utilization = 0.0;   // fraction of the fused layout's base layer in use
  double metal_utilization = 0.0;
};

// counts[k] = number of cells of CellKind k sharing the layout.
FusedAreaResult fused_area(const CellAreaModel& model, const std::array<double, kNumCellKinds>& counts);

struct AreaComparison {
  double sram_compute = 0.0;
  double rom_compute = 0.0;
  double brom_compute = 0.0;
  double fused = 0.0;
};

// Area of one D x W storage array plus its compute array under the four
// L-Unit designs. Strictly decreasing in the listed order with defaults.
AreaComparison lunit_area_comparison(const CellAreaModel& model, int64_t depth, int64_t width);

}  // namespace roma
