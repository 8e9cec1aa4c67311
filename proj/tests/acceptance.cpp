// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "golden.hpp"
#include "oracles.hpp"
#include "roma/brom.hpp"
#include "roma/engine.hpp"
#include "roma/fp8.hpp"
#include "roma/perf.hpp"
#include "roma/rng.hpp"
#include "roma/romimage.hpp"
#include "roma/shadow.hpp"
#include "roma/toygen.hpp"

using namespace roma;

namespace {

int g_failures = 0;

void criterion(int num, const std::string& name, const std::function<bool(std::string&)>& body) {
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  std::printf("[%s] %2d. %s%s%s\n", ok ? "PASS" : "FAIL", num, name.c_str(),
              detail.empty() ? "" : " -- ", detail.c_str());
  if (!ok) ++g_failures;
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

// --- 1: block-ROM read equivalence over the full grid --------------------

bool brom_equivalence(std::string& detail) {
  std::mt19937_64 rng(101);
  long checked = 0;
  for (int depth : {4, 64, 1024, 4096}) {
    for (int width : {1, 8, 64}) {
      for (int trial = 0; trial < 100; ++trial) {
        RomContents rom = RomContents::random(depth, width, rng);
        BRomArray brom = build_brom(rom);
        if (!check_equivalence(rom, brom)) {
          detail = "mismatch at depth " + std::to_string(depth) + " width " + std::to_string(width);
          return false;
        }
        ++checked;
      }
    }
  }
  detail = std::to_string(checked) + " contents, every address, 3-way equal";
  return true;
}

// --- 2: transistor-count ratio -------------------------------------------

bool transistor_ratio(std::string& detail) {
  double prev = 1.0;
  for (int w = 1; w <= 8192; ++w) {
    double r = brom_transistor_ratio(w, kDefaultNumCgen);
    if (w >= 160 && r > 0.30) {
      detail = "ratio above 0.30 at width " + std::to_string(w);
      return false;
    }
    if (r <= 0.25) {
      detail = "ratio not above 1/4 at width " + std::to_string(w);
      return false;
    }
    if (w > 1 && r >= prev) {
      detail = "ratio not monotone at width " + std::to_string(w);
      return false;
    }
    prev = r;
  }
  detail = "ratio (W+32)/(4W) <= 0.30 from W=160, monotone toward 1/4";
  return true;
}

// --- 3: group dot product vs independent integer replay ------------------

bool eq1_bit_exact(std::string& detail) {
  std::mt19937_64 rng(103);
  for (int bits : {2, 4}) {
    for (int trial = 0; trial < 100'000; ++trial) {
      std::vector<Fp16> acts(kGroupSize);
      for (auto& a : acts) a = fp16_encode(uniform_double(rng, -32.0, 32.0));
      QuantGroup g;
      g.bit_width = static_cast<uint8_t>(bits);
      g.scale = fp16_encode(uniform_double(rng, 1e-3, 4.0));
      g.zero = static_cast<uint8_t>(uniform_int(rng, 0, (1 << bits) - 1));
      for (auto& w : g.weights) w = static_cast<uint8_t>(uniform_int(rng, 0, (1 << bits) - 1));
      double got = lunit_group_dot(align_block(acts), g);
      double want = oracle::group_dot_replay(acts, g);
      if (got != want) {
        detail = "bit mismatch at trial " + std::to_string(trial) + " B=" + std::to_string(bits);
        return false;
      }
    }
  }
  detail = "2x100000 pairs bit-identical to the replay oracle";
  return true;
}

// --- 4: matvec fidelity against the fp64 dequantized reference -----------

bool matvec_fidelity(std::string& detail) {
  std::mt19937_64 rng(104);
  double worst = 0.0;
  for (int cols : {128, 256, 384, 512, 768, 1024}) {
    for (int trial = 0; trial < 10; ++trial) {
      int rows = uniform_int(rng, 4, 48);
      std::vector<double> vals(static_cast<size_t>(rows) * cols);
      for (auto& v : vals) v = uniform_double(rng, -1.0, 1.0);
      QuantMatrix m = quantize_matrix(rows, cols, vals, trial % 2 ? 2 : 4);
      std::vector<Fp16> acts(cols);
      for (auto& a : acts) a = fp16_encode(uniform_double(rng, -1.0, 1.0));
      double rel = oracle::rel_err_l2(lunit_matvec(m, acts), oracle::dequant_matvec(m, acts));
      worst = std::max(worst, rel);
      if (rel > 0x1.0p-7) {
        detail = "relative error " + std::to_string(rel) + " at cols " + std::to_string(cols);
        return false;
      }
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "worst relative error %.3e <= 2^-7", worst);
  detail = buf;
  return true;
}

// --- 5: token capacity anchors --------------------------------------------

bool capacity_anchors(std::string& detail) {
  CapacityParams p = fit_capacity(64'000'000, 736, 256'000'000, 3808, 16, 304'000'000);
  if (p.kv_bytes_per_token != 62'500 || p.lora_bytes_per_rank != 1'125'000) {
    detail = "two-point solve produced unexpected constants";
    return false;
  }
  p.sram_budget_bytes = 64'000'000;
  bool ok = max_tokens(p, 16) == 736 && max_tokens(p, 64) == 0;
  p.sram_budget_bytes = 256'000'000;
  ok = ok && max_tokens(p, 16) == 3808;
  detail = "kv=62500 B/token, adapter=1125000 B/rank; 736 / 3808 / 0 integer-exact";
  return ok;
}

// --- 6: latency anchors ----------------------------------------------------

bool latency_anchors(std::string& detail) {
  PerfModel m = perf_model_3b4();
  bool ok = m.decode.rate(0) == 31'800.0;
  ok = ok && m.decode.rate(1024) == 24'600.0;
  ok = ok && m.decode.rate(4096) > 10'000.0;
  ok = ok && m.prefill.time_s(256, 16) == 5.6e-3;
  ok = ok && m.prefill.time_s(4096, 16) == 140.2e-3;
  ok = ok && m.prefill.time_s(1024, 16) < 30e-3;
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "decode 31800/24600 exact, rate(4096)=%.0f > 10000; prefill 5.6/140.2 ms exact, "
                "t(1024)=%.2f ms < 30",
                m.decode.rate(4096), m.prefill.time_s(1024, 16) * 1e3);
  detail = buf;
  return ok;
}

// --- 7: rank robustness ----------------------------------------------------

bool rank_robustness(std::string& detail) {
  PerfModel m = perf_model_3b4();
  double delta = rank_sensitivity(m.prefill, 1024, 16, 64);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "rank 16->64 prefill delta %.2f%% <= 5%%", delta * 100);
  detail = buf;
  return delta <= 0.05 && delta >= 0.0;
}

// --- 8: fused-cell property ------------------------------------------------

bool fused_cell(std::string& detail) {
  std::mt19937_64 rng(108);
  for (int trial = 0; trial < 10'000; ++trial) {
    CellAreaModel m;
    for (auto& d : m.demand) {
      d.base = uniform_double(rng, 0.01, 8.0);
      d.metal = uniform_double(rng, 0.01, 8.0);
    }
    std::array<double, kNumCellKinds> counts{};
    for (auto& c : counts) c = static_cast<double>(uniform_int(rng, 1, 64));
    auto r = fused_area(m, counts);
    if (r.fused > r.separate * (1 + 1e-12)) {
      detail = "fused exceeded separate at trial " + std::to_string(trial);
      return false;
    }
    if (r.fused == r.separate) {
      // Equality is legitimate only when one layer dominates every kind.
      bool all_base = true, all_metal = true;
      for (int k = 0; k < kNumCellKinds; ++k) {
        all_base = all_base && m.demand[k].base >= m.demand[k].metal;
        all_metal = all_metal && m.demand[k].metal >= m.demand[k].base;
      }
      if (!all_base && !all_metal) {
        detail = "non-degenerate equality at trial " + std::to_string(trial);
        return false;
      }
    }
  }
  auto cmp = lunit_area_comparison(CellAreaModel::defaults(512), 4096, 512);
  if (!(cmp.sram_compute > cmp.rom_compute && cmp.rom_compute > cmp.brom_compute &&
        cmp.brom_compute > cmp.fused)) {
    detail = "default constants break the design ordering";
    return false;
  }
  detail = "10000 random demand vectors; ordering SRAM > ROM > B-ROM+compute > fused holds";
  return true;
}

// --- 9: prefill/decode cache consistency ----------------------------------

bool kv_consistency(std::string& detail) {
  ModelConfig cfg = toy_config(4, 4);
  RomImage rom = toy_rom_image(cfg, 2024);
  RomImage lora = toy_lora_image(cfg, 2025);
  Runtime rt = load_runtime(rom, &lora, cfg);

  std::mt19937_64 rng(109);
  for (int trial = 0; trial < 50; ++trial) {
    int len = uniform_int(rng, 4, 28);
    std::vector<int> stream(len);
    for (auto& t : stream) t = uniform_int(rng, 0, cfg.vocab - 1);
    int cut = uniform_int(rng, 1, len - 1);

    KvCache whole = make_cache(rt);
    std::vector<double> logits_whole = prefill(rt, stream, whole);

    KvCache split = make_cache(rt);
    std::vector<double> logits =
        prefill(rt, std::span<const int>(stream).subspan(0, cut), split);
    for (int i = cut; i < len; ++i) logits = decode_step(rt, stream[i], split);

    if (!bits_equal(logits, logits_whole)) {
      detail = "logits diverged at trial " + std::to_string(trial);
      return false;
    }
    for (int l = 0; l < cfg.layers; ++l) {
      if (split.k[l] != whole.k[l] || split.v[l] != whole.v[l]) {
        detail = "cache bytes diverged at trial " + std::to_string(trial);
        return false;
      }
    }
  }
  detail = "50 random splits bit-exact in logits and cache bytes";
  return true;
}

// --- 10: shadow agreement and the pinned golden sequence -------------------

bool shadow_agreement(std::string& detail) {
  double worst = 0.0;
  for (int bits : {4, 2}) {
    ModelConfig cfg = toy_config(bits, 4);
    RomImage rom = toy_rom_image(cfg, 1234);
    RomImage lora = toy_lora_image(cfg, 1235);
    Runtime rt = load_runtime(rom, &lora, cfg);
    ShadowModel shadow = build_shadow(rt);
    std::vector<int> prompt{1, 2, 3};
    ShadowComparison cmp = compare_with_shadow(rt, shadow, prompt, 24);
    worst = std::max(worst, cmp.max_layer_rel_err);
    if (cmp.max_layer_rel_err > 0x1.0p-5) {
      detail = "per-layer error above 2^-5 at B=" + std::to_string(bits);
      return false;
    }
  }

  ModelConfig cfg = toy_config(4, 4);
  RomImage rom = toy_rom_image(cfg, 1234);
  RomImage lora = toy_lora_image(cfg, 1235);
  Runtime rt = load_runtime(rom, &lora, cfg);
  std::vector<int> got = generate(rt, std::vector<int>{1, 2, 3}, 24);
  std::vector<int> want(kGoldenTokens.begin(), kGoldenTokens.end());
  if (got != want) {
    detail = "golden greedy sequence mismatch";
    return false;
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "worst per-layer error %.3e <= 2^-5; golden sequence reproduced",
                worst);
  detail = buf;
  return true;
}

// --- 11: container round trips and corruption detection --------------------

bool container_round_trips(std::string& detail) {
  std::mt19937_64 rng(111);
  std::vector<NamedTensor> model;
  for (int i = 0; i < 3; ++i) {
    NamedTensor t;
    t.name = "t" + std::to_string(i);
    t.rows = 2 + i;
    t.cols = 100 + 50 * i;
    t.values.resize(static_cast<size_t>(t.rows) * t.cols);
    for (auto& v : t.values) v = uniform_double(rng, -2, 2);
    model.push_back(std::move(t));
  }
  RomImage img = pack_model(model, 4);
  RomImage back = load_image(serialize_image(img));
  for (const auto& t : model) {
    QuantMatrix direct = quantize_matrix(t.rows, t.cols, t.values, 4);
    QuantMatrix loaded = back.tensor(t.name);
    if (loaded.groups.size() != direct.groups.size()) {
      detail = "group count changed through the container";
      return false;
    }
    for (size_t g = 0; g < direct.groups.size(); ++g) {
      if (!(loaded.groups[g].scale == direct.groups[g].scale) ||
          loaded.groups[g].zero != direct.groups[g].zero ||
          loaded.groups[g].weights != direct.groups[g].weights) {
        detail = "group payload changed through the container";
        return false;
      }
    }
  }

  for (auto fmt : {Fp8Format::kE4M3, Fp8Format::kE5M2}) {
    for (int bits = 0; bits < 256; ++bits) {
      Fp8 v{static_cast<uint8_t>(bits)};
      if (fp8_is_nan(v, fmt) || fp8_is_inf(v, fmt)) continue;
      if (fp8_encode(fp8_decode(v, fmt), fmt).bits != v.bits) {
        detail = "fp8 round trip failed at pattern " + std::to_string(bits);
        return false;
      }
    }
  }

  auto bytes = serialize_image(img);
  auto expect_fault = [&](std::vector<uint8_t> b, ImageFault fault, const char* what) {
    try {
      load_image(b);
    } catch (const ImageFormatError& e) {
      if (e.fault() == fault) return true;
      detail = std::string(what) + ": wrong fault class";
      return false;
    }
    detail = std::string(what) + ": corruption not detected";
    return false;
  };
  auto b1 = bytes;
  b1[0] = 'X';
  if (!expect_fault(b1, ImageFault::kBadMagic, "magic")) return false;
  auto b2 = bytes;
  b2.pop_back();
  if (!expect_fault(b2, ImageFault::kTruncated, "truncation")) return false;
  auto b3 = bytes;
  b3[b3.size() - 5] ^= 0x10;
  if (!expect_fault(b3, ImageFault::kBadPayloadChecksum, "payload flip")) return false;
  auto b4 = bytes;
  b4[34] ^= 0x01;
  if (!expect_fault(b4, ImageFault::kBadDirectoryChecksum, "directory flip")) return false;
  RomImage overlap = img;
  overlap.directory[1].offset = overlap.directory[0].offset;
  if (!expect_fault(serialize_image(overlap), ImageFault::kOverlap, "overlap")) return false;

  detail = "pack/load identity, fp8 codec exhaustive, corruption classes distinct";
  return true;
}

}  // namespace

int main() {
  std::printf("acceptance suite\n----------------\n");
  criterion(1, "block-ROM equivalence (D x W grid, 100 contents each)", brom_equivalence);
  criterion(2, "transistor-count ratio approaches 1/4", transistor_ratio);
  criterion(3, "group dot product bit-exact vs integer replay", eq1_bit_exact);
  criterion(4, "matvec fidelity <= 2^-7 vs fp64 reference", matvec_fidelity);
  criterion(5, "token capacity anchors integer-exact", capacity_anchors);
  criterion(6, "decode/prefill latency anchors exact, bounds hold", latency_anchors);
  criterion(7, "prefill rank sensitivity <= 5%", rank_robustness);
  criterion(8, "fused-cell area property and design ordering", fused_cell);
  criterion(9, "prefill/decode cache consistency bit-exact", kv_consistency);
  criterion(10, "fp64 shadow agreement and pinned golden sequence", shadow_agreement);
  criterion(11, "container round trips and corruption detection", container_round_trips);
  if (g_failures) {
    std::printf("----------------\n%d criterion(s) FAILED\n", g_failures);
    return 1;
  }
  std::printf("----------------\nall criteria passed\n");
  return 0;
}
