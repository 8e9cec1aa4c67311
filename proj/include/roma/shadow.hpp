#pragma once

#include <span>
#include <vector>

#include "roma/engine.hpp"

namespace roma {

// Full-precision shadow of a runtime: the same dequantized weights and layer
// structure evaluated densely in fp64, with no fp16 casts and none of the
// quantized kernels. Serves as the reference the quantized engine is
// checked against.
struct ShadowModel {
  ModelConfig cfg;
  std::vector<double> embed;  // vocab x hidden
  std::vector<double> final_norm;
  struct Layer {
    std::vector<double> q, k, v, o, gate, up, down;  // dense row-major
    std::vector<double> attn_norm, mlp_norm;
    std::array<std::vector<double>, 7> lora_a;  // rank x in, empty when detached
    std::array<std::vector<double>, 7> lora_b;  // out x rank
  };
  std::vector<Layer> layers;
};

struct ShadowCache {
  int length = 0;
  std::vector<std::vector<double>> k, v;  // per layer
};

ShadowModel build_shadow(const Runtime& rt);
ShadowCache make_shadow_cache(const ShadowModel& m);

std::vector<double> shadow_forward_token(const ShadowModel& m, int token, ShadowCache& cache);
std::vector<int> shadow_generate(const ShadowModel& m, std::span<const int> prompt, int max_new);

// Replays one layer in fp64 from the quantized engine's layer input, using
// the engine's cached fp16 history for earlier positions. Isolates the
// arithmetic error of a single layer.
std::vector<double> shadow_layer_replay(const ShadowModel& m, int layer,
                                        std::span<const double> input, int pos,
                                        const KvCache& engine_cache);

struct ShadowComparison {
  double max_layer_rel_err = 0.0;  // worst per-layer L2 relative error
  int steps = 0;
  int agreed = 0;  // greedy tokens matching between engine and shadow
  double agreement() const { return steps ? static_cast<double>(agreed) / steps : 1.0; }
};

// Runs the engine greedily, replaying every layer through the shadow, and
// runs the shadow's own greedy generation for token agreement.
ShadowComparison compare_with_shadow(const Runtime& rt, const ShadowModel& m,
                                     std::span<const int> prompt, int max_new);

}  // namespace roma
