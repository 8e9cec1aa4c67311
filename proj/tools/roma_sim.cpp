// roma_sim: pack ROM images, run toy QLoRA generation, check the block-ROM
// read path, and emit calibrated performance sweeps as CSV.

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "roma/brom.hpp"
#include "roma/engine.hpp"
#include "roma/error.hpp"
#include "roma/perf.hpp"
#include "roma/rng.hpp"
#include "roma/romimage.hpp"
#include "roma/shadow.hpp"
#include "roma/tensor_file.hpp"
#include "roma/toygen.hpp"

using namespace roma;

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::vector<int> parse_prompt(const std::string& s) {
  std::vector<int> ids;
  size_t pos = 0;
  while (pos < s.size()) {
    size_t comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    std::string tok = s.substr(pos, comma - pos);
    if (!tok.empty()) {
      try {
        ids.push_back(std::stoi(tok));
      } catch (...) {
        throw RomaError(ErrorCode::kUsage, "bad token id in prompt: " + tok);
      }
    }
    pos = comma + 1;
  }
  if (ids.empty()) throw RomaError(ErrorCode::kUsage, "prompt must contain at least one token id");
  return ids;
}

struct CsvWriter {
  std::ofstream out;
  explicit CsvWriter(const std::string& path) : out(path, std::ios::trunc) {
    if (!out) throw RomaError(ErrorCode::kIo, "cannot open " + path + " for writing");
    out << "model,bit_width,rank,seq_len_or_kv,metric,value,provenance\n";
  }
  void row(const std::string& model, int bits, int rank, const std::string& x,
           const std::string& metric, const std::string& value, Provenance prov) {
    out << model << ',' << bits << ',' << rank << ',' << x << ',' << metric << ',' << value << ','
        << provenance_name(prov) << '\n';
  }
};

int cmd_pack(const std::string& weights_path, int bits, const std::string& out_path,
             uint64_t rom_capacity) {
  auto tensors = read_tensor_file(weights_path);
  RomImage img = pack_model(tensors, bits);
  write_image_file(img, out_path);
  uint64_t bytes = image_footprint(img);
  std::printf("packed %zu tensors at %d-bit into %s\n", tensors.size(), bits, out_path.c_str());
  std::printf("footprint: %" PRIu64 " bytes (%.3f GB decimal, %.3f GiB)\n", bytes, bytes / 1e9,
              bytes / 1073741824.0);
  std::printf("fits ROM capacity %" PRIu64 ": %s\n", rom_capacity,
              fits_rom(img, rom_capacity) ? "true" : "false");
  return 0;
}

int cmd_run(const std::string& rom_path, const std::string& lora_path,
            const std::string& config_path, const std::string& prompt_str, int max_new,
            bool verify_shadow) {
  std::vector<int> prompt = parse_prompt(prompt_str);
  ModelConfig cfg = ModelConfig::from_json_file(config_path);
  RomImage rom = load_image_file(rom_path);
  RomImage lora;
  bool have_lora = !lora_path.empty();
  if (have_lora) lora = load_image_file(lora_path);
  Runtime rt = load_runtime(rom, have_lora ? &lora : nullptr, cfg);

  std::printf("token capacity: %" PRId64 " (adapter bytes %" PRId64 ", %" PRId64
              " cache bytes/token)\n",
              rt.max_tokens, rt.lora_bytes, rt.kv_bytes_per_token);
  std::vector<int> out = generate(rt, prompt, max_new);
  std::printf("generated:");
  for (int t : out) std::printf(" %d", t);
  std::printf("\n");

  if (verify_shadow) {
    ShadowModel shadow = build_shadow(rt);
    ShadowComparison cmp = compare_with_shadow(rt, shadow, prompt, max_new);
    std::printf("shadow: max per-layer relative error %.3e, greedy agreement %.1f%% (%d/%d)\n",
                cmp.max_layer_rel_err, 100.0 * cmp.agreement(), cmp.agreed, cmp.steps);
  }
  return 0;
}

int cmd_brom(int depth, int width, int trials, uint64_t seed) {
  if (depth < 1 || width < 1 || trials < 1) {
    throw RomaError(ErrorCode::kUsage, "depth, width, trials must be positive");
  }
  std::mt19937_64 rng(seed);
  bool all_ok = true;
  int padded = ((depth + 3) / 4) * 4;
  for (int t = 0; t < trials; ++t) {
    RomContents rom = RomContents::random(depth, width, rng);
    BRomArray brom = build_brom(rom);
    all_ok = all_ok && check_equivalence(rom, brom);
  }
  if (padded != depth) {
    std::printf("depth %d padded to %d for block formation\n", depth, padded);
  }
  int64_t std_count = transistor_count(RomKind::kStandard, depth, width);
  int64_t brom_count = transistor_count(RomKind::kBrom, padded, width);
  std::printf("equivalent: %s, std=%" PRId64 ", brom=%" PRId64 ", ratio=%g\n",
              all_ok ? "true" : "false", std_count, brom_count,
              static_cast<double>(brom_count) / static_cast<double>(std_count));
  return all_ok ? 0 : 1;
}

int cmd_perf(const std::string& model_name, const std::string& sweep, const std::string& out_path) {
  PerfModel m = perf_model(model_name);
  CsvWriter csv(out_path);
  bool cal = m.capacity_calibrated;

  if (sweep == "prefill") {
    for (int len : {256, 512, 1024, 2048, 4096}) {
      bool anchor = cal && (len == 256 || len == 4096);
      csv.row(m.name, m.dims.bit_width, 16, std::to_string(len), "prefill_ms",
              fmt(m.prefill.time_s(len, 16) * 1e3),
              anchor ? Provenance::kAnchor : (cal ? Provenance::kFit : Provenance::kDerived));
    }
  } else if (sweep == "decode") {
    for (int kv : {0, 256, 512, 1024, 2048, 4096}) {
      bool anchor = (cal && (kv == 0 || kv == 1024)) || (!cal && kv == 0);
      csv.row(m.name, m.dims.bit_width, 16, std::to_string(kv), "decode_tokens_per_s",
              fmt(m.decode.rate(kv)),
              anchor ? Provenance::kAnchor : (cal ? Provenance::kFit : Provenance::kDerived));
    }
  } else if (sweep == "capacity") {
    if (auto warn = capacity_crosscheck(m.capacity, m.dims)) {
      std::fprintf(stderr, "warning: %s\n", warn->c_str());
    }
    for (int mb : {64, 128, 192, 256, 304}) {
      for (int rank : {16, 32, 64}) {
        CapacityParams p = m.capacity;
        p.sram_budget_bytes = static_cast<int64_t>(mb) * 1'000'000;
        bool anchor = cal && rank == 16 && (mb == 64 || mb == 256);
        bool anchor_zero = cal && rank == 64 && mb == 64;  // published drop-to-zero point
        csv.row(m.name, m.dims.bit_width, rank, std::to_string(mb), "max_tokens",
                std::to_string(max_tokens(p, rank)),
                (anchor || anchor_zero) ? Provenance::kAnchor
                                        : (cal ? Provenance::kFit : Provenance::kDerived));
      }
    }
  } else if (sweep == "rank") {
    for (int rank : {16, 32, 48, 64}) {
      csv.row(m.name, m.dims.bit_width, rank, "1024", "prefill_ms",
              fmt(m.prefill.time_s(1024, rank) * 1e3),
              rank == 16 && cal ? Provenance::kFit : Provenance::kDerived);
      csv.row(m.name, m.dims.bit_width, rank, "1024", "prefill_delta_vs_rank16",
              fmt(rank_sensitivity(m.prefill, 1024, 16, rank)), Provenance::kDerived);
    }
  } else if (sweep == "ppa") {
    PpaParams params = PpaParams::defaults();
    PpaReport rep = ppa_report(params, ChipTopology{});
    csv.row(m.name, m.dims.bit_width, 16, "0", "total_area_mm2", fmt(rep.total_area_mm2),
            Provenance::kAnchor);
    csv.row(m.name, m.dims.bit_width, 16, "0", "total_power_w", fmt(rep.total_power_w),
            Provenance::kAnchor);
    for (const auto& row : rep.rows) {
      csv.row(m.name, m.dims.bit_width, 16, "0", row.unit_class + "_area_mm2", fmt(row.area_mm2),
              Provenance::kDerived);
      csv.row(m.name, m.dims.bit_width, 16, "0", row.unit_class + "_power_w", fmt(row.power_w),
              Provenance::kDerived);
    }
    // L-Unit design comparison in standard-ROM bitcell units for one array.
    auto cmpv = lunit_area_comparison(CellAreaModel::defaults(512), 4096, 512);
    csv.row(m.name, m.dims.bit_width, 16, "0", "lunit_sram_compute_units", fmt(cmpv.sram_compute),
            Provenance::kDerived);
    csv.row(m.name, m.dims.bit_width, 16, "0", "lunit_rom_compute_units", fmt(cmpv.rom_compute),
            Provenance::kDerived);
    csv.row(m.name, m.dims.bit_width, 16, "0", "lunit_brom_compute_units", fmt(cmpv.brom_compute),
            Provenance::kDerived);
    csv.row(m.name, m.dims.bit_width, 16, "0", "lunit_fused_units", fmt(cmpv.fused),
            Provenance::kDerived);
  } else {
    throw RomaError(ErrorCode::kUsage, "unknown sweep: " + sweep);
  }
  std::printf("wrote %s sweep for %s to %s\n", sweep.c_str(), m.name.c_str(), out_path.c_str());
  return 0;
}

int cmd_gen_toy(const std::string& dir, int bits, int rank, uint64_t seed) {
  ModelConfig cfg = toy_config(bits, rank);
  std::string wpath = dir + "/toy.weights";
  std::string cpath = dir + "/toy.config.json";
  std::string lpath = dir + "/toy.lora.img";
  write_tensor_file(toy_base_weights(cfg, seed), wpath);
  {
    std::ofstream out(cpath, std::ios::trunc);
    if (!out) throw RomaError(ErrorCode::kIo, "cannot open " + cpath + " for writing");
    out << cfg.to_json() << "\n";
  }
  write_image_file(toy_lora_image(cfg, seed + 1), lpath);
  std::printf("wrote %s, %s, %s\n", wpath.c_str(), cpath.c_str(), lpath.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ROM/SRAM QLoRA accelerator functional simulator and performance model"};
  app.require_subcommand(1);

  std::string weights_path, out_path, rom_path, lora_path, config_path, prompt_str;
  std::string model_name = "3b4", sweep = "prefill", dir = ".";
  int bits = 4, max_new = 16, depth = 1024, width = 64, trials = 10, rank = 4;
  uint64_t seed = 1, rom_capacity = 1'860'000'000;
  bool verify_shadow = false;

  auto* pack = app.add_subcommand("pack", "quantize a weights file into a ROM image");
  pack->add_option("--weights", weights_path, "named-tensor fp32 weights file")->required();
  pack->add_option("--bits", bits, "weight bit width")->check(CLI::IsMember({2, 4}))->required();
  pack->add_option("--out", out_path, "output image path")->required();
  pack->add_option("--rom-capacity", rom_capacity, "ROM capacity in bytes for the fits verdict");

  auto* run = app.add_subcommand("run", "greedy token generation from packed images");
  run->add_option("--rom", rom_path, "ROM image")->required();
  run->add_option("--lora", lora_path, "adapter image (optional)");
  run->add_option("--config", config_path, "model config json")->required();
  run->add_option("--prompt", prompt_str, "comma-separated token ids")->required();
  run->add_option("--max-new", max_new, "tokens to generate")->check(CLI::PositiveNumber);
  run->add_flag("--verify-shadow", verify_shadow, "replay layers through the fp64 shadow");

  auto* brom = app.add_subcommand("brom", "standard-vs-block ROM equivalence check");
  brom->add_option("--depth", depth, "addresses")->required();
  brom->add_option("--width", width, "bits per word")->required();
  brom->add_option("--trials", trials, "random contents to sweep");
  brom->add_option("--seed", seed, "rng seed");

  auto* perf = app.add_subcommand("perf", "calibrated capacity/latency/ppa sweeps");
  perf->add_option("--model", model_name, "3b4 or 8b2")->check(CLI::IsMember({"3b4", "8b2"}));
  perf->add_option("--sweep", sweep, "prefill|decode|capacity|rank|ppa")
      ->check(CLI::IsMember({"prefill", "decode", "capacity", "rank", "ppa"}))
      ->required();
  perf->add_option("--out", out_path, "output csv path")->required();

  auto* gen = app.add_subcommand("gen-toy", "write a deterministic toy checkpoint");
  gen->add_option("--dir", dir, "output directory");
  gen->add_option("--bits", bits, "base bit width")->check(CLI::IsMember({2, 4}));
  gen->add_option("--rank", rank, "adapter rank");
  gen->add_option("--seed", seed, "rng seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // usage errors exit 2
  }

  try {
    if (pack->parsed()) return cmd_pack(weights_path, bits, out_path, rom_capacity);
    if (run->parsed()) {
      return cmd_run(rom_path, lora_path, config_path, prompt_str, max_new, verify_shadow);
    }
    if (brom->parsed()) return cmd_brom(depth, width, trials, seed);
    if (perf->parsed()) return cmd_perf(model_name, sweep, out_path);
    if (gen->parsed()) return cmd_gen_toy(dir, bits, rank, seed);
  } catch (const RomaError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
