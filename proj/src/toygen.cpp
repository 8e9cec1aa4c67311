#include "roma/toygen.hpp"

#include <algorithm>
#include <cmath>

#include "roma/rng.hpp"

namespace roma {
namespace {

NamedTensor random_tensor(std::mt19937_64& rng, const std::string& name, int rows, int cols,
                          double scale) {
  NamedTensor t;
  t.name = name;
  t.rows = rows;
  t.cols = cols;
  t.values.resize(static_cast<size_t>(rows) * cols);
  for (auto& v : t.values) v = uniform_double(rng, -scale, scale);
  return t;
}

}  // namespace

ModelConfig toy_config(int bit_width, int lora_rank) {
  ModelConfig c;
  c.layers = 2;
  c.hidden = 64;
  c.heads = 4;
  c.kv_heads = 2;
  c.head_dim = 16;
  c.mlp = 160;
  c.vocab = 256;
  c.bit_width = bit_width;
  c.lora_rank = lora_rank;
  c.sram_budget_bytes = 1 << 20;  // 1 MiB: room for a few thousand toy tokens
  return c;
}

std::vector<NamedTensor> toy_base_weights(const ModelConfig& cfg, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<NamedTensor> out;
  out.push_back(random_tensor(rng, "embed", cfg.vocab, cfg.hidden, 0.5));
  for (int l = 0; l < cfg.layers; ++l) {
    std::string p = "L" + std::to_string(l) + ".";
    // Near-unit norm weights; projections scaled by 1/sqrt(fan_in) to keep
    // activations inside fp16 range.
    NamedTensor an = random_tensor(rng, p + "attn_norm", 1, cfg.hidden, 0.1);
    for (auto& v : an.values) v += 1.0;
    out.push_back(std::move(an));
    for (const auto& proj : kAllProjections) {
      int in = cfg.proj_in(proj);
      int rows = cfg.proj_out(proj);
      out.push_back(random_tensor(rng, p + proj, rows, in, 1.0 / std::sqrt(in)));
    }
    NamedTensor mn = random_tensor(rng, p + "mlp_norm", 1, cfg.hidden, 0.1);
    for (auto& v : mn.values) v += 1.0;
    out.push_back(std::move(mn));
  }
  NamedTensor fn = random_tensor(rng, "final_norm", 1, cfg.hidden, 0.1);
  for (auto& v : fn.values) v += 1.0;
  out.push_back(std::move(fn));
  return out;
}

std::vector<NamedTensor> toy_lora_weights(const ModelConfig& cfg, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<NamedTensor> out;
  for (int l = 0; l < cfg.layers; ++l) {
    for (const auto& proj : cfg.lora_targets) {
      int in = cfg.proj_in(proj);
      int rows = cfg.proj_out(proj);
      std::string base = "L" + std::to_string(l) + "." + proj + ".";
      out.push_back(random_tensor(rng, base + "A", cfg.lora_rank, in, 0.5 / std::sqrt(in)));
      out.push_back(random_tensor(rng, base + "B", rows, cfg.lora_rank, 0.5 / std::sqrt(std::max(1, cfg.lora_rank))));
    }
  }
  return out;
}

RomImage toy_rom_image(const ModelConfig& cfg, uint64_t seed) {
  return pack_model(toy_base_weights(cfg, seed), cfg.bit_width);
}

RomImage toy_lora_image(const ModelConfig& cfg, uint64_t seed) {
  return pack_fp8(toy_lora_weights(cfg, seed));
}

}  // namespace roma
