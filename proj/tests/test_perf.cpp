#include <cmath>

#include "doctest.h"
#include "roma/perf.hpp"
#include "roma/error.hpp"

using namespace roma;

TEST_CASE("capacity anchors reproduce exactly") {
  CapacityParams p;  // calibrated defaults
  p.sram_budget_bytes = 64'000'000;
  CHECK(max_tokens(p, 16) == 736);
  CHECK(max_tokens(p, 64) == 0);
  p.sram_budget_bytes = 256'000'000;
  CHECK(max_tokens(p, 16) == 3808);
}

TEST_CASE("refitting the capacity constants is deterministic and exact") {
  CapacityParams p = fit_capacity(64'000'000, 736, 256'000'000, 3808, 16, 304'000'000);
  CHECK(p.kv_bytes_per_token == 62'500);
  CHECK(p.lora_bytes_per_rank == 1'125'000);
  CHECK_THROWS_AS(fit_capacity(64'000'000, 736, 256'000'000, 737, 16, 1), RomaError);
}

TEST_CASE("max_tokens monotone in rank and budget") {
  CapacityParams p;
  int64_t prev = max_tokens(p, 0);
  for (int rank : {8, 16, 32, 64, 128, 1024}) {
    int64_t t = max_tokens(p, rank);
    CHECK(t <= prev);
    prev = t;
  }
  int64_t prev_b = 0;
  for (int64_t mb : {16, 64, 128, 256, 304}) {
    p.sram_budget_bytes = mb * 1'000'000;
    int64_t t = max_tokens(p, 16);
    CHECK(t >= prev_b);
    prev_b = t;
  }
}

TEST_CASE("decode anchors are bit-exact and the floor holds") {
  PerfModel m = perf_model_3b4();
  CHECK(m.decode.rate(0) == 31'800.0);
  CHECK(m.decode.rate(1024) == 24'600.0);
  CHECK(m.decode.rate(4096) > 10'000.0);
  CHECK(m.decode.rate(4096) == doctest::Approx(14'649.4).epsilon(1e-4));
  CHECK(m.decode.t0_s() == doctest::Approx(31.45e-6).epsilon(1e-3));
  CHECK(m.decode.tkv_s() == doctest::Approx(8.99e-9).epsilon(1e-2));
}

TEST_CASE("decode rate strictly decreasing in cache length") {
  for (const char* name : {"3b4", "8b2"}) {
    PerfModel m = perf_model(name);
    double prev = m.decode.rate(0);
    for (int kv = 64; kv <= 8192; kv *= 2) {
      double r = m.decode.rate(kv);
      CHECK(r < prev);
      prev = r;
    }
    CHECK(m.decode.rate(4096) > 10'000.0);  // published floor, both models
  }
}

TEST_CASE("prefill anchors are bit-exact, interior point under the bound") {
  PerfModel m = perf_model_3b4();
  CHECK(m.prefill.time_s(256, 16) == 5.6e-3);
  CHECK(m.prefill.time_s(4096, 16) == 140.2e-3);
  double t1024 = m.prefill.time_s(1024, 16);
  CHECK(t1024 < 30e-3);
  CHECK(t1024 == doctest::Approx(24.93e-3).epsilon(1e-3));
  CHECK(m.prefill.quad_coeff_s() == doctest::Approx(3.217e-9).epsilon(1e-3));
  CHECK(m.prefill.lin_coeff_at_ref_s() == doctest::Approx(21.05e-6).epsilon(1e-3));
}

TEST_CASE("prefill strictly increasing and convex in length") {
  for (const char* name : {"3b4", "8b2"}) {
    PerfModel m = perf_model(name);
    double prev = m.prefill.time_s(64, 16);
    double prev_gap = 0.0;
    for (int len = 128; len <= 8192; len += 64) {
      double t = m.prefill.time_s(len, 16);
      CHECK(t > prev);
      double gap = t - prev;
      CHECK(gap >= prev_gap);  // convexity on the uniform grid
      prev_gap = gap;
      prev = t;
    }
  }
}

TEST_CASE("8b2 derived points respect the published envelopes") {
  PerfModel m = perf_model_8b2();
  CHECK(m.decode.rate(0) == 24'100.0);
  CHECK(m.prefill.time_s(256, 16) < 7e-3);     // both models under 7 ms at 256
  CHECK(m.prefill.time_s(4096, 16) < 190e-3);  // and under 190 ms at 4k
  // The 4-bit 3B model prefit is faster than the 2-bit 8B at equal length.
  PerfModel s = perf_model_3b4();
  CHECK(s.prefill.time_s(1024, 16) < m.prefill.time_s(1024, 16));
}

TEST_CASE("rank sensitivity") {
  PerfModel m = perf_model_3b4();
  CHECK(rank_sensitivity(m.prefill, 1024, 16, 16) == 0.0);
  double d = rank_sensitivity(m.prefill, 1024, 16, 64);
  CHECK(d <= 0.05);
  CHECK(d > 0.0);
  // Monotone nondecreasing in the upper rank.
  double prev = 0.0;
  for (int r2 : {16, 24, 32, 48, 64, 96}) {
    double delta = rank_sensitivity(m.prefill, 1024, 16, r2);
    CHECK(delta >= prev);
    prev = delta;
  }
  CHECK_THROWS_AS(rank_sensitivity(m.prefill, 1024, 64, 16), RomaError);
}

TEST_CASE("analytic model geometry") {
  ModelDims d3 = dims_3b4();
  CHECK(d3.base_macs_per_token() == 2'818'572'288LL);
  CHECK(d3.lora_macs_per_rank_token() == 54'272LL * 28);
  CHECK(d3.kv_bytes_per_token() == 114'688);
  ModelDims d8 = dims_8b2();
  CHECK(d8.base_macs_per_token() == 6'979'321'856LL);
  CHECK(d8.kv_bytes_per_token() == 131'072);
}

TEST_CASE("capacity cross-check warns only on a real mismatch") {
  PerfModel m = perf_model_3b4();
  // Calibrated 1.125 MB/rank vs analytic ~1.52 MB/rank: inside 2x.
  CHECK(!capacity_crosscheck(m.capacity, m.dims).has_value());
  // The 8b2 geometry's analytic bytes are over 2x the 3b4 calibration.
  CHECK(capacity_crosscheck(m.capacity, dims_8b2()).has_value());
}

TEST_CASE("ppa report") {
  ChipTopology topo;
  CHECK(topo.matrix_units() == 256);
  CHECK(topo.vector_units() == 16);

  PpaReport r = ppa_report(PpaParams::defaults(), topo);
  CHECK(r.total_area_mm2 == 503.7);
  CHECK(r.total_power_w == 33.1);

  double area_frac_sum = 0.0, power_frac_sum = 0.0, area_sum = 0.0;
  for (const auto& row : r.rows) {
    area_frac_sum += row.area_frac;
    power_frac_sum += row.power_frac;
    area_sum += row.area_mm2;
  }
  CHECK(std::abs(area_frac_sum - 1.0) <= 1e-9);
  CHECK(std::abs(power_frac_sum - 1.0) <= 1e-9);
  CHECK(area_sum == doctest::Approx(503.7));

  // The two matrix-unit halves hold the top two area shares.
  double lu = 0, hu = 0, top1 = 0, top2 = 0;
  for (const auto& row : r.rows) {
    if (row.unit_class == "l_unit") lu = row.area_frac;
    if (row.unit_class == "h_unit") hu = row.area_frac;
  }
  for (const auto& row : r.rows) {
    if (row.area_frac > top1) {
      top2 = top1;
      top1 = row.area_frac;
    } else if (row.area_frac > top2) {
      top2 = row.area_frac;
    }
  }
  CHECK(lu >= top2);
  CHECK(hu >= top2);
  CHECK(lu + hu > 0.5);

  PpaParams bad = PpaParams::defaults();
  bad.classes[0].area_frac += 0.01;
  CHECK_THROWS_AS(ppa_report(bad, topo), RomaError);
}
