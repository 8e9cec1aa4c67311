#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "roma/error.hpp"
#include "roma/qcore.hpp"

namespace roma {

// On-disk container, little-endian throughout.
//
//   header (32 bytes):
//     0   magic "ROMA"
//     4   u16 version (1)
//     6   u8  bit_width        (2/4 for group payloads, 8 for fp8 payloads)
//     7   u8  payload_kind     (0 = quant groups, 1 = raw fp8)
//     8   u16 group_size       (128)
//     10  u16 reserved (0)
//     12  u32 tensor_count
//     16  u32 directory crc32
//     20  u32 payload crc32
//     24  u64 payload_size
//   directory: per tensor { u16 name_len, name, u32 rows, u32 cols,
//                           u64 offset, u64 length }   (offset into payload)
//   payload: group records (fp16 scale, u8 zero, 16*B weight bytes, weight i
//            at bit position i*B) or raw fp8 bytes, row-major.

enum class PayloadKind : uint8_t { kQuantGroups = 0, kFp8Raw = 1 };

// Distinct failure classes for corrupted images.
enum class ImageFault {
  kBadMagic,
  kBadVersion,
  kBadField,
  kTruncated,
  kOverlap,
  kBadDirectoryChecksum,
  kBadPayloadChecksum,
  kBadLayout,
};

class ImageFormatError : public RomaError {
 public:
  ImageFormatError(ImageFault fault, const std::string& what)
      : RomaError(ErrorCode::kValidation, what), fault_(fault) {}
  ImageFault fault() const { return fault_; }

 private:
  ImageFault fault_;
};

struct TensorEntry {
  std::string name;
  uint32_t rows = 0;
  uint32_t cols = 0;
  uint64_t offset = 0;
  uint64_t length = 0;
};

struct RomImage {
  uint8_t bit_width = 4;
  PayloadKind kind = PayloadKind::kQuantGroups;
  std::vector<TensorEntry> directory;
  std::vector<uint8_t> payload;

  const TensorEntry* find(const std::string& name) const;
  QuantMatrix tensor(const std::string& name) const;   // quant-group images
  Fp8Matrix fp8_tensor(const std::string& name) const; // fp8 images
};

struct NamedTensor {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::vector<double> values;  // row-major
};

inline constexpr size_t kGroupRecordBytes2 = 2 + 1 + 32;  // B=2
inline constexpr size_t kGroupRecordBytes4 = 2 + 1 + 64;  // B=4

size_t group_record_bytes(int bit_width);

// Quantizes every row into 128-wide groups and serializes. Byte-identical
// output for identical input.
RomImage pack_model(const std::vector<NamedTensor>& weights, int bit_width);

// fp8 container; tensor names carry the attachment point (e.g. "L3.q.A").
RomImage pack_fp8(const std::vector<NamedTensor>& tensors, Fp8Format fmt = Fp8Format::kE4M3);

std::vector<uint8_t> serialize_image(const RomImage& img);
RomImage load_image(const std::vector<uint8_t>& bytes);
RomImage load_image_file(const std::string& path);
void write_image_file(const RomImage& img, const std::string& path);

// Exact serialized size.
uint64_t image_footprint(const RomImage& img);
bool fits_rom(const RomImage& img, uint64_t rom_capacity_bytes);

// Storage estimate for a parameter count at a bit width, counting the
// 3-byte per-group scale/zero overhead.
double estimate_rom_bytes(double param_count, int bit_width);

uint32_t crc32(const uint8_t* data, size_t len, uint32_t seed = 0);

}  // namespace roma
