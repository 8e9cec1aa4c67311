#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "roma/error.hpp"
#include "roma/qcore.hpp"
#include "roma/rng.hpp"

using namespace roma;

namespace {

std::vector<Fp16> random_acts(std::mt19937_64& rng, int n, double lo = -1.0, double hi = 1.0) {
  std::vector<Fp16> acts(n);
  for (auto& a : acts) a = fp16_encode(uniform_double(rng, lo, hi));
  return acts;
}

QuantMatrix random_matrix(std::mt19937_64& rng, int rows, int cols, int bits) {
  std::vector<double> vals(static_cast<size_t>(rows) * cols);
  for (auto& v : vals) v = uniform_double(rng, -1.0, 1.0);
  return quantize_matrix(rows, cols, vals, bits);
}

}  // namespace

TEST_CASE("quantize_group constant input") {
  std::vector<double> w(kGroupSize, 3.0);
  auto g = quantize_group(w, 2);
  for (int i = 1; i < kGroupSize; ++i) CHECK(g.weights[i] == g.weights[0]);
  CHECK(dequant_weight(g, 0) == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("quantize_group hits the min-max lattice exactly") {
  // Range [-1, 2] at 2 bits: scale 1.0, zero 1, values map to {0,1,2,3}.
  std::vector<double> w{-1.0, 0.0, 1.0, 2.0};
  auto g = quantize_group(w, 2);
  CHECK(fp16_decode(g.scale) == 1.0);
  CHECK(g.zero == 1);
  CHECK(g.weights[0] == 0);
  CHECK(g.weights[1] == 1);
  CHECK(g.weights[2] == 2);
  CHECK(g.weights[3] == 3);
  // Padding dequantizes to zero.
  CHECK(dequant_weight(g, 100) == 0.0);
}

TEST_CASE("quantize_group keeps one-sided groups inside the lattice") {
  // All-positive values (a norm-weight row, say): the range extends to
  // zero so nothing clamps away from its value.
  std::mt19937_64 rng(20);
  std::vector<double> w(kGroupSize);
  for (auto& v : w) v = uniform_double(rng, 0.9, 1.1);
  auto g = quantize_group(w, 4);
  double s = fp16_decode(g.scale);
  for (int i = 0; i < kGroupSize; ++i) {
    CHECK(std::abs(dequant_weight(g, i) - w[i]) <= s / 2 + s * 0x1.0p-7);
  }
}

TEST_CASE("quantize_group round-trip error bound") {
  std::mt19937_64 rng(21);
  for (int bits : {2, 4}) {
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> w(kGroupSize);
      double scale = std::exp2(uniform_int(rng, -3, 3));
      for (auto& v : w) v = uniform_double(rng, -scale, scale);
      auto g = quantize_group(w, bits);
      double s = fp16_decode(g.scale);
      double ulp = std::abs(s) * 0x1.0p-11;
      for (int i = 0; i < kGroupSize; ++i) {
        CHECK(std::abs(dequant_weight(g, i) - w[i]) <= s / 2 + ulp * (1 << bits));
      }
    }
  }
}

TEST_CASE("quantize_group rejects bad input") {
  std::vector<double> w{1.0, std::nan("")};
  CHECK_THROWS_AS(quantize_group(w, 2), RomaError);
  CHECK_THROWS_AS(quantize_group(std::vector<double>(4, 0.0), 3), RomaError);
  CHECK_THROWS_AS(quantize_group(std::vector<double>(129, 0.0), 2), RomaError);
}

TEST_CASE("lunit_group_dot worked example") {
  // acts = [1.0, 1.0] padded, w = [3, 1, z...], z = 1, s = 1.0:
  // integer part 3*1024 + 1*1024 - 2048*1 = 2048, scaled by 2^(15-15-10) -> 2.0.
  std::vector<Fp16> acts(kGroupSize, Fp16{0});
  acts[0] = fp16_encode(1.0);
  acts[1] = fp16_encode(1.0);
  QuantGroup g;
  g.bit_width = 2;
  g.scale = fp16_encode(1.0);
  g.zero = 1;
  g.weights.fill(1);
  g.weights[0] = 3;
  auto aligned = align_block(acts);
  CHECK(lunit_group_dot(aligned, g) == 2.0);
}

TEST_CASE("lunit_group_dot zero when all weights equal the zero point") {
  std::mt19937_64 rng(22);
  auto acts = random_acts(rng, kGroupSize, -8.0, 8.0);
  QuantGroup g;
  g.bit_width = 4;
  g.scale = fp16_encode(0.25);
  g.zero = 9;
  g.weights.fill(9);
  CHECK(lunit_group_dot(align_block(acts), g) == 0.0);
}

TEST_CASE("lunit_group_dot matches the independent replay bit for bit") {
  std::mt19937_64 rng(23);
  for (int bits : {2, 4}) {
    for (int trial = 0; trial < 5000; ++trial) {
      auto acts = random_acts(rng, kGroupSize, -16.0, 16.0);
      QuantGroup g;
      g.bit_width = static_cast<uint8_t>(bits);
      g.scale = fp16_encode(uniform_double(rng, 0.001, 2.0));
      g.zero = static_cast<uint8_t>(uniform_int(rng, 0, (1 << bits) - 1));
      for (auto& w : g.weights) w = static_cast<uint8_t>(uniform_int(rng, 0, (1 << bits) - 1));
      double got = lunit_group_dot(align_block(acts), g);
      double want = oracle::group_dot_replay(acts, g);
      CHECK(got == want);
    }
  }
}

TEST_CASE("lunit_group_dot is exactly linear in the scale") {
  std::mt19937_64 rng(24);
  auto acts = random_acts(rng, kGroupSize);
  QuantGroup g;
  g.bit_width = 4;
  g.scale = fp16_encode(0.5);
  g.zero = 7;
  for (auto& w : g.weights) w = static_cast<uint8_t>(uniform_int(rng, 0, 15));
  auto aligned = align_block(acts);
  double base = lunit_group_dot(aligned, g);
  g.scale = fp16_encode(1.0);  // exact doubling
  CHECK(lunit_group_dot(aligned, g) == 2.0 * base);
}

TEST_CASE("integer accumulator stays inside 23 bits under stress") {
  // Adversarial: max-magnitude aligned values, max weights, zero point 0.
  std::vector<Fp16> acts(kGroupSize, Fp16{0x7BFF});  // 65504, |value| = 2047
  QuantGroup g;
  g.bit_width = 4;
  g.scale = fp16_encode(1.0);
  g.zero = 0;
  g.weights.fill(15);
  auto aligned = align_block(acts);
  int64_t dot = 0;
  for (int k = 0; k < kGroupSize; ++k) dot += int64_t{aligned.values[k]} * g.weights[k];
  CHECK(dot - aligned.vsum * g.zero < (int64_t{1} << kDotWidthBits));
  CHECK(lunit_group_dot(aligned, g) == doctest::Approx(65504.0 * 15 * 128).epsilon(1e-3));

  // And the opposite corner: zero weights against max zero point.
  g.weights.fill(0);
  g.zero = 15;
  CHECK(-(aligned.vsum * g.zero) > -(int64_t{1} << kDotWidthBits));
}

TEST_CASE("lunit_matvec reduces to the group dot for one row") {
  std::mt19937_64 rng(25);
  auto m = random_matrix(rng, 1, kGroupSize, 4);
  auto acts = random_acts(rng, kGroupSize);
  auto y = lunit_matvec(m, acts);
  REQUIRE(y.size() == 1);
  CHECK(y[0] == lunit_group_dot(align_block(acts), m.group(0, 0)));
}

TEST_CASE("lunit_matvec zero activations give a zero vector") {
  std::mt19937_64 rng(26);
  auto m = random_matrix(rng, 5, 256, 2);
  std::vector<Fp16> acts(256, Fp16{0});
  for (double y : lunit_matvec(m, acts)) CHECK(y == 0.0);
}

TEST_CASE("lunit_matvec shape mismatch") {
  std::mt19937_64 rng(27);
  auto m = random_matrix(rng, 2, 128, 4);
  CHECK_THROWS_AS(lunit_matvec(m, random_acts(rng, 64)), RomaError);
}

TEST_CASE("lunit_matvec stays within the alignment truncation bound") {
  std::mt19937_64 rng(28);
  for (int cols : {128, 384, 1024}) {
    auto m = random_matrix(rng, 16, cols, 4);
    auto acts = random_acts(rng, cols);
    auto got = lunit_matvec(m, acts);
    auto want = oracle::dequant_matvec(m, acts);
    CHECK(oracle::rel_err_l2(got, want) <= 0x1.0p-7);
  }
}

TEST_CASE("padding with w == z never changes matvec bits") {
  std::mt19937_64 rng(29);
  auto m = random_matrix(rng, 8, 200, 4);  // 200 cols -> padded second group
  auto acts = random_acts(rng, 200);
  auto base = lunit_matvec(m, acts);

  // Extend every row with one more all-padding group and the activations
  // with zeros; output bits must not move.
  QuantMatrix wide;
  wide.rows = m.rows;
  wide.cols = 200 + kGroupSize;
  wide.bit_width = m.bit_width;
  for (int r = 0; r < m.rows; ++r) {
    for (int gi = 0; gi < m.groups_per_row(); ++gi) wide.groups.push_back(m.group(r, gi));
    QuantGroup pad;
    pad.bit_width = static_cast<uint8_t>(m.bit_width);
    pad.scale = fp16_encode(0.125);
    pad.zero = 3;
    pad.weights.fill(3);
    wide.groups.push_back(pad);
  }
  std::vector<Fp16> wide_acts = acts;
  wide_acts.resize(wide.cols, Fp16{0});
  auto extended = lunit_matvec(wide, wide_acts);
  for (size_t i = 0; i < base.size(); ++i) CHECK(extended[i] == base[i]);
}

TEST_CASE("parallel and serial matvec kernels are bit-identical") {
  std::mt19937_64 rng(30);
  auto m = random_matrix(rng, 640, 512, 4);  // large enough to take the parallel path
  auto acts = random_acts(rng, 512);
  auto par = lunit_matvec(m, acts);
  auto ser = lunit_matvec_ref(m, acts);
  REQUIRE(par.size() == ser.size());
  for (size_t i = 0; i < par.size(); ++i) CHECK(par[i] == ser[i]);
}

TEST_CASE("hunit_lora_matvec rank 0 yields zeros") {
  LoraPair lora;
  lora.b.rows = 7;
  auto y = hunit_lora_matvec(lora, std::vector<Fp16>(3, Fp16{0}));
  REQUIRE(y.size() == 7);
  for (double v : y) CHECK(v == 0.0);
}

namespace {

Fp8Matrix random_fp8(std::mt19937_64& rng, int rows, int cols) {
  Fp8Matrix m;
  m.rows = rows;
  m.cols = cols;
  m.data.resize(static_cast<size_t>(rows) * cols);
  for (auto& v : m.data) v = fp8_encode(uniform_double(rng, -2.0, 2.0));
  return m;
}

}  // namespace

TEST_CASE("hunit_lora_matvec rank-1 outer product") {
  std::mt19937_64 rng(31);
  int cols = 12, rows = 9;
  LoraPair lora;
  lora.rank = 1;
  lora.a = random_fp8(rng, 1, cols);
  lora.b = random_fp8(rng, rows, 1);
  auto acts = random_acts(rng, cols);

  auto got = hunit_lora_matvec(lora, acts);
  double mid = 0.0;
  for (int c = 0; c < cols; ++c) mid += fp8_decode(lora.a.at(0, c)) * fp16_decode(acts[c]);
  for (int r = 0; r < rows; ++r) {
    CHECK(got[r] == doctest::Approx(fp8_decode(lora.b.at(r, 0)) * mid).epsilon(1e-12));
  }
}

TEST_CASE("hunit_lora_matvec matches dense reference and is reproducible") {
  std::mt19937_64 rng(32);
  int cols = 48, rows = 20, rank = 4;
  LoraPair lora;
  lora.rank = rank;
  lora.a = random_fp8(rng, rank, cols);
  lora.b = random_fp8(rng, rows, rank);
  auto acts = random_acts(rng, cols);

  auto got = hunit_lora_matvec(lora, acts);
  auto ref = hunit_lora_matvec_ref(lora, acts);
  for (size_t i = 0; i < got.size(); ++i) CHECK(got[i] == ref[i]);

  // Dense (B*A)*x in fp64; fp8 decode is exact so only association differs.
  std::vector<double> x(cols);
  for (int c = 0; c < cols; ++c) x[c] = fp16_decode(acts[c]);
  for (int r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (int c = 0; c < cols; ++c) {
      double w = 0.0;
      for (int k = 0; k < rank; ++k) {
        w += fp8_decode(lora.b.at(r, k)) * fp8_decode(lora.a.at(k, c));
      }
      acc += w * x[c];
    }
    CHECK(got[r] == doctest::Approx(acc).epsilon(1e-12));
  }

  auto again = hunit_lora_matvec(lora, acts);
  for (size_t i = 0; i < got.size(); ++i) CHECK(got[i] == again[i]);

  CHECK_THROWS_AS(hunit_lora_matvec(lora, random_acts(rng, 5)), RomaError);
}
