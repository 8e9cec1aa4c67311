#include "roma/romimage.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>

namespace roma {
namespace {

constexpr std::array<char, 4> kMagic = {'R', 'O', 'M', 'A'};
constexpr uint16_t kVersion = 1;
constexpr size_t kHeaderBytes = 32;

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
}
void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  Reader(const std::vector<uint8_t>& bytes) : bytes_(bytes) {}
  uint16_t u16() { return static_cast<uint16_t>(u8() | (u8() << 8)); }
  uint32_t u32() {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(u8()) << (8 * i);
    return v;
  }
  uint64_t u64() {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(u8()) << (8 * i);
    return v;
  }
  uint8_t u8() {
    if (pos_ >= bytes_.size()) {
      throw ImageFormatError(ImageFault::kTruncated, "image truncated");
    }
    return bytes_[pos_++];
  }
  std::string str(size_t n) {
    if (pos_ + n > bytes_.size()) {
      throw ImageFormatError(ImageFault::kTruncated, "image truncated in name");
    }
    std::string s(bytes_.begin() + pos_, bytes_.begin() + pos_ + n);
    pos_ += n;
    return s;
  }
  size_t pos() const { return pos_; }

 private:
  const std::vector<uint8_t>& bytes_;
  size_t pos_ = 0;
};

std::vector<uint8_t> encode_directory(const std::vector<TensorEntry>& dir) {
  std::vector<uint8_t> out;
  for (const auto& e : dir) {
    put_u16(out, static_cast<uint16_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    put_u32(out, e.rows);
    put_u32(out, e.cols);
    put_u64(out, e.offset);
    put_u64(out, e.length);
  }
  return out;
}

void append_group_record(std::vector<uint8_t>& out, const QuantGroup& g) {
  put_u16(out, g.scale.bits);
  out.push_back(g.zero);
  int b = g.bit_width;
  size_t start = out.size();
  out.resize(start + 16 * static_cast<size_t>(b), 0);
  for (int i = 0; i < kGroupSize; ++i) {
    int bitpos = i * b;
    out[start + bitpos / 8] |= static_cast<uint8_t>(g.weights[i] << (bitpos % 8));
  }
}

QuantGroup parse_group_record(const uint8_t* p, int bit_width) {
  QuantGroup g;
  g.bit_width = static_cast<uint8_t>(bit_width);
  g.scale = Fp16{static_cast<uint16_t>(p[0] | (p[1] << 8))};
  g.zero = p[2];
  uint8_t mask = static_cast<uint8_t>((1 << bit_width) - 1);
  for (int i = 0; i < kGroupSize; ++i) {
    int bitpos = i * bit_width;
    g.weights[i] = (p[3 + bitpos / 8] >> (bitpos % 8)) & mask;
  }
  return g;
}

}  // namespace

uint32_t crc32(const uint8_t* data, size_t len, uint32_t seed) {
  static const auto table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  uint32_t c = seed ^ 0xFFFFFFFFu;
  for (size_t i = 0; i < len; ++i) c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

size_t group_record_bytes(int bit_width) {
  if (bit_width != 2 && bit_width != 4) {
    throw RomaError(ErrorCode::kValidation, "group_record_bytes: bit_width must be 2 or 4");
  }
  return 3 + 16 * static_cast<size_t>(bit_width);
}

const TensorEntry* RomImage::find(const std::string& name) const {
  for (const auto& e : directory) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

QuantMatrix RomImage::tensor(const std::string& name) const {
  if (kind != PayloadKind::kQuantGroups) {
    throw RomaError(ErrorCode::kValidation, "tensor(): image does not hold quant groups");
  }
  const TensorEntry* e = find(name);
  if (!e) throw RomaError(ErrorCode::kValidation, "tensor not found: " + name);
  QuantMatrix m;
  m.rows = static_cast<int>(e->rows);
  m.cols = static_cast<int>(e->cols);
  m.bit_width = bit_width;
  size_t rec = group_record_bytes(bit_width);
  size_t n = static_cast<size_t>(m.rows) * m.groups_per_row();
  m.groups.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    m.groups.push_back(parse_group_record(payload.data() + e->offset + i * rec, bit_width));
  }
  return m;
}

Fp8Matrix RomImage::fp8_tensor(const std::string& name) const {
  if (kind != PayloadKind::kFp8Raw) {
    throw RomaError(ErrorCode::kValidation, "fp8_tensor(): image does not hold fp8 data");
  }
  const TensorEntry* e = find(name);
  if (!e) throw RomaError(ErrorCode::kValidation, "tensor not found: " + name);
  Fp8Matrix m;
  m.rows = static_cast<int>(e->rows);
  m.cols = static_cast<int>(e->cols);
  m.data.resize(static_cast<size_t>(m.rows) * m.cols);
  for (size_t i = 0; i < m.data.size(); ++i) m.data[i] = Fp8{payload[e->offset + i]};
  return m;
}

RomImage pack_model(const std::vector<NamedTensor>& weights, int bit_width) {
  RomImage img;
  img.bit_width = static_cast<uint8_t>(bit_width);
  img.kind = PayloadKind::kQuantGroups;
  size_t rec = group_record_bytes(bit_width);
  for (const auto& t : weights) {
    if (img.find(t.name)) {
      throw RomaError(ErrorCode::kValidation, "pack_model: duplicate tensor name " + t.name);
    }
    if (t.rows < 1 || t.cols < 1 || t.values.size() != static_cast<size_t>(t.rows) * t.cols) {
      throw RomaError(ErrorCode::kValidation, "pack_model: bad shape for " + t.name);
    }
    QuantMatrix m = quantize_matrix(t.rows, t.cols, t.values, bit_width);
    TensorEntry e;
    e.name = t.name;
    e.rows = static_cast<uint32_t>(t.rows);
    e.cols = static_cast<uint32_t>(t.cols);
    e.offset = img.payload.size();
    for (const auto& g : m.groups) append_group_record(img.payload, g);
    e.length = img.payload.size() - e.offset;
    if (e.length != m.groups.size() * rec) {
      throw RomaError(ErrorCode::kValidation, "pack_model: internal layout error");
    }
    img.directory.push_back(std::move(e));
  }
  return img;
}

RomImage pack_fp8(const std::vector<NamedTensor>& tensors, Fp8Format fmt) {
  RomImage img;
  img.bit_width = 8;
  img.kind = PayloadKind::kFp8Raw;
  for (const auto& t : tensors) {
    if (img.find(t.name)) {
      throw RomaError(ErrorCode::kValidation, "pack_fp8: duplicate tensor name " + t.name);
    }
    TensorEntry e;
    e.name = t.name;
    e.rows = static_cast<uint32_t>(t.rows);
    e.cols = static_cast<uint32_t>(t.cols);
    e.offset = img.payload.size();
    for (double v : t.values) img.payload.push_back(fp8_encode(v, fmt).bits);
    e.length = img.payload.size() - e.offset;
    img.directory.push_back(std::move(e));
  }
  return img;
}

std::vector<uint8_t> serialize_image(const RomImage& img) {
  std::vector<uint8_t> dir = encode_directory(img.directory);
  std::vector<uint8_t> out;
  out.reserve(kHeaderBytes + dir.size() + img.payload.size());
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  put_u16(out, kVersion);
  out.push_back(img.bit_width);
  out.push_back(static_cast<uint8_t>(img.kind));
  put_u16(out, kGroupSize);
  put_u16(out, 0);  // reserved
  put_u32(out, static_cast<uint32_t>(img.directory.size()));
  put_u32(out, crc32(dir.data(), dir.size()));
  put_u32(out, crc32(img.payload.data(), img.payload.size()));
  put_u64(out, img.payload.size());
  out.insert(out.end(), dir.begin(), dir.end());
  out.insert(out.end(), img.payload.begin(), img.payload.end());
  return out;
}

RomImage load_image(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < kHeaderBytes) {
    throw ImageFormatError(ImageFault::kTruncated, "image smaller than header");
  }
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw ImageFormatError(ImageFault::kBadMagic, "bad magic");
  }
  Reader r(bytes);
  r.str(4);  // magic
  if (r.u16() != kVersion) throw ImageFormatError(ImageFault::kBadVersion, "unsupported version");

  RomImage img;
  img.bit_width = r.u8();
  uint8_t kind = r.u8();
  uint16_t group_size = r.u16();
  uint16_t reserved = r.u16();
  uint32_t count = r.u32();
  uint32_t dir_crc = r.u32();
  uint32_t payload_crc = r.u32();
  uint64_t payload_size = r.u64();

  if (kind > 1) throw ImageFormatError(ImageFault::kBadField, "bad payload kind");
  img.kind = static_cast<PayloadKind>(kind);
  bool groups = img.kind == PayloadKind::kQuantGroups;
  if ((groups && img.bit_width != 2 && img.bit_width != 4) || (!groups && img.bit_width != 8)) {
    throw ImageFormatError(ImageFault::kBadField, "bad bit width");
  }
  if (group_size != kGroupSize) throw ImageFormatError(ImageFault::kBadField, "bad group size");
  if (reserved != 0) throw ImageFormatError(ImageFault::kBadField, "reserved field nonzero");

  size_t dir_start = r.pos();
  for (uint32_t i = 0; i < count; ++i) {
    TensorEntry e;
    e.name = r.str(r.u16());
    e.rows = r.u32();
    e.cols = r.u32();
    e.offset = r.u64();
    e.length = r.u64();
    img.directory.push_back(std::move(e));
  }
  size_t dir_end = r.pos();
  if (crc32(bytes.data() + dir_start, dir_end - dir_start) != dir_crc) {
    throw ImageFormatError(ImageFault::kBadDirectoryChecksum, "directory checksum mismatch");
  }
  if (bytes.size() != dir_end + payload_size) {
    throw ImageFormatError(ImageFault::kTruncated, "payload size mismatch");
  }
  img.payload.assign(bytes.begin() + dir_end, bytes.end());
  if (crc32(img.payload.data(), img.payload.size()) != payload_crc) {
    throw ImageFormatError(ImageFault::kBadPayloadChecksum, "payload checksum mismatch");
  }

  // Entries must fit the payload, not overlap, and match their shapes.
  std::vector<std::pair<uint64_t, uint64_t>> spans;
  for (const auto& e : img.directory) {
    if (e.offset > img.payload.size() || e.length > img.payload.size() - e.offset) {
      throw ImageFormatError(ImageFault::kTruncated, "directory entry outside payload: " + e.name);
    }
    uint64_t expect =
        groups ? static_cast<uint64_t>(e.rows) * ((e.cols + kGroupSize - 1) / kGroupSize) *
                     group_record_bytes(img.bit_width)
               : static_cast<uint64_t>(e.rows) * e.cols;
    if (e.rows < 1 || e.cols < 1 || e.length != expect) {
      throw ImageFormatError(ImageFault::kBadLayout, "entry length does not match shape: " + e.name);
    }
    spans.emplace_back(e.offset, e.offset + e.length);
  }
  std::sort(spans.begin(), spans.end());
  for (size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].first < spans[i - 1].second) {
      throw ImageFormatError(ImageFault::kOverlap, "directory entries overlap");
    }
  }
  return img;
}

RomImage load_image_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RomaError(ErrorCode::kIo, "cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (!in.good() && !in.eof()) throw RomaError(ErrorCode::kIo, "read error on " + path);
  return load_image(bytes);
}

void write_image_file(const RomImage& img, const std::string& path) {
  auto bytes = serialize_image(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RomaError(ErrorCode::kIo, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out.good()) throw RomaError(ErrorCode::kIo, "write error on " + path);
}

uint64_t image_footprint(const RomImage& img) {
  return kHeaderBytes + encode_directory(img.directory).size() + img.payload.size();
}

bool fits_rom(const RomImage& img, uint64_t rom_capacity_bytes) {
  return image_footprint(img) <= rom_capacity_bytes;
}

double estimate_rom_bytes(double param_count, int bit_width) {
  return param_count * (bit_width / 8.0 + 3.0 / kGroupSize);
}

}  // namespace roma
