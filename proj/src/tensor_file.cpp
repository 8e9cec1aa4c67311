#include "roma/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "roma/error.hpp"

namespace roma {
namespace {

constexpr char kMagic[4] = {'W', 'T', 'S', 'R'};
constexpr uint16_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
  uint8_t buf[sizeof(T)];
  for (size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<uint8_t>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  uint8_t buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!in.good()) throw RomaError(ErrorCode::kIo, "weights file truncated");
  T v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void write_tensor_file(const std::vector<NamedTensor>& tensors, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RomaError(ErrorCode::kIo, "cannot open " + path + " for writing");
  out.write(kMagic, 4);
  put<uint16_t>(out, kVersion);
  put<uint32_t>(out, static_cast<uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    if (t.values.size() != static_cast<size_t>(t.rows) * t.cols) {
      throw RomaError(ErrorCode::kValidation, "write_tensor_file: bad shape for " + t.name);
    }
    put<uint16_t>(out, static_cast<uint16_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put<uint32_t>(out, static_cast<uint32_t>(t.rows));
    put<uint32_t>(out, static_cast<uint32_t>(t.cols));
    for (double v : t.values) {
      put<uint32_t>(out, std::bit_cast<uint32_t>(static_cast<float>(v)));
    }
  }
  if (!out.good()) throw RomaError(ErrorCode::kIo, "write error on " + path);
}

std::vector<NamedTensor> read_tensor_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RomaError(ErrorCode::kIo, "cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in.good() || std::memcmp(magic, kMagic, 4) != 0) {
    throw RomaError(ErrorCode::kValidation, "not a weights file: " + path);
  }
  if (get<uint16_t>(in) != kVersion) {
    throw RomaError(ErrorCode::kValidation, "unsupported weights file version");
  }
  uint32_t count = get<uint32_t>(in);
  std::vector<NamedTensor> tensors;
  tensors.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    uint16_t name_len = get<uint16_t>(in);
    t.name.resize(name_len);
    in.read(t.name.data(), name_len);
    t.rows = static_cast<int>(get<uint32_t>(in));
    t.cols = static_cast<int>(get<uint32_t>(in));
    if (!in.good() || t.rows < 1 || t.cols < 1) {
      throw RomaError(ErrorCode::kValidation, "bad tensor header in " + path);
    }
    size_t n = static_cast<size_t>(t.rows) * t.cols;
    t.values.resize(n);
    for (size_t k = 0; k < n; ++k) {
      t.values[k] = static_cast<double>(std::bit_cast<float>(get<uint32_t>(in)));
    }
    tensors.push_back(std::move(t));
  }
  return tensors;
}

}  // namespace roma
