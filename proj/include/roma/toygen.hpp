#pragma once

#include <cstdint>
#include <vector>

#include "roma/engine.hpp"
#include "roma/romimage.hpp"

namespace roma {

// Desk-scale model config: 2 layers, hidden 64, 4 heads / 2 kv heads.
ModelConfig toy_config(int bit_width = 4, int lora_rank = 4);

// Deterministic random weights for a config; identical (seed, config) pairs
// produce identical tensors on every platform.
std::vector<NamedTensor> toy_base_weights(const ModelConfig& cfg, uint64_t seed);
std::vector<NamedTensor> toy_lora_weights(const ModelConfig& cfg, uint64_t seed);

RomImage toy_rom_image(const ModelConfig& cfg, uint64_t seed);
RomImage toy_lora_image(const ModelConfig& cfg, uint64_t seed);

}  // namespace roma
