#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roma/perf.hpp"
#include "roma/qcore.hpp"
#include "roma/romimage.hpp"
#include "roma/topology.hpp"

namespace roma {

inline const std::vector<std::string> kAllProjections = {"q", "k", "v", "o", "gate", "up", "down"};

struct ModelConfig {
  int layers = 0;
  int hidden = 0;
  int heads = 0;
  int kv_heads = 0;
  int head_dim = 0;
  int mlp = 0;
  int vocab = 0;
  double rope_base = 10000.0;
  double rms_eps = 1e-5;
  int bit_width = 4;
  int lora_rank = 0;
  std::vector<std::string> lora_targets = kAllProjections;
  int64_t sram_budget_bytes = 0;

  int kv_dim() const { return kv_heads * head_dim; }
  int proj_in(const std::string& proj) const;   // input dim of a projection
  int proj_out(const std::string& proj) const;  // output dim of a projection
  void validate() const;

  static ModelConfig from_json_file(const std::string& path);
  static ModelConfig from_json(const std::string& text);
  std::string to_json() const;
};

// Append-only fp16 K/V store, one stream per layer.
struct KvCache {
  int layers = 0;
  int kv_dim = 0;
  int64_t max_tokens = 0;
  int length = 0;                       // committed tokens
  std::vector<std::vector<Fp16>> k;     // [layer], length*kv_dim entries
  std::vector<std::vector<Fp16>> v;

  std::span<const Fp16> k_at(int layer, int pos) const;
  std::span<const Fp16> v_at(int layer, int pos) const;
};

struct LayerWeights {
  QuantMatrix q, k, v, o, gate, up, down;
  std::vector<double> attn_norm, mlp_norm;            // dequantized vectors
  std::array<std::optional<LoraPair>, 7> lora;        // indexed like kAllProjections
};

struct PlacementEntry {
  std::string tensor;
  int rows = 0;
  double rows_per_column = 0.0;  // weight-stationary split over the 16 unit columns
};

struct Runtime {
  ModelConfig cfg;
  ChipTopology topo;
  QuantMatrix embed;  // tied token embedding / output head
  std::vector<double> final_norm;
  std::vector<LayerWeights> layers;
  int64_t lora_bytes = 0;
  int64_t kv_bytes_per_token = 0;
  int64_t max_tokens = 0;
  std::vector<PlacementEntry> placement;
};

// Per-layer residual snapshots for shadow comparison.
struct LayerTrace {
  std::vector<double> input;
  std::vector<double> output;
};

// Validates images against the config, dequantizes norms, resolves adapter
// attachment points, and charges adapters + cache against the SRAM budget.
Runtime load_runtime(const RomImage& rom, const RomImage* lora, const ModelConfig& cfg,
                     const ChipTopology& topo = ChipTopology{});

KvCache make_cache(const Runtime& rt);

// One transformer block at position pos: norm, QKV (base + adapter), RoPE,
// grouped-query attention over the cache, output projection, norm, gated
// MLP, residuals. Appends this position's K/V to the cache stream of the
// layer; the caller commits the position by bumping cache.length.
std::vector<Fp16> forward_layer(const Runtime& rt, int layer, std::span<const Fp16> x,
                                KvCache& cache, int pos);

// H-Unit attention over cached fp16 K/V for positions 0..pos.
std::vector<double> attention_over_cache(const Runtime& rt, std::span<const Fp16> q,
                                         const KvCache& cache, int layer, int pos);

// Single-token forward through every layer; appends this token's K/V and
// advances the cache. Returns vocab logits.
std::vector<double> forward_token(const Runtime& rt, int token, KvCache& cache,
                                  std::vector<LayerTrace>* trace = nullptr);

// Sequential prefill: decode_step per prompt token, logits of the last.
std::vector<double> prefill(const Runtime& rt, std::span<const int> tokens, KvCache& cache);
std::vector<double> decode_step(const Runtime& rt, int token, KvCache& cache);

int argmax_token(std::span<const double> logits);

std::vector<int> generate(const Runtime& rt, std::span<const int> prompt, int max_new);

// Tensor names and shapes a config expects in its ROM image.
struct ExpectedTensor {
  std::string name;
  int rows = 0;
  int cols = 0;
};
std::vector<ExpectedTensor> expected_rom_tensors(const ModelConfig& cfg);

}  // namespace roma
