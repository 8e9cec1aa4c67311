#pragma once

#include <string>
#include <vector>

#include "roma/romimage.hpp"

namespace roma {

// Simple named-tensor weights container, little-endian:
//   "WTSR" | u16 version (1) | u32 tensor_count |
//   per tensor { u16 name_len, name, u32 rows, u32 cols, f32 data[rows*cols] }
void write_tensor_file(const std::vector<NamedTensor>& tensors, const std::string& path);
std::vector<NamedTensor> read_tensor_file(const std::string& path);

}  // namespace roma
