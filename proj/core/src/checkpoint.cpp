#include "ttdsr/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ttdsr::ad {

namespace {

constexpr char kMagic[8] = {'T', 'T', 'D', 'S', 'R', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64_array(std::ostream& os, const std::vector<double>& values) {
  for (double v : values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
  }
}

void get_f64_array(std::istream& is, std::vector<double>& values) {
  for (double& v : values) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw std::runtime_error("checkpoint: truncated tensor data");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    std::memcpy(&v, &bits, 8);
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
  os.write(kMagic, sizeof kMagic);
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(ckpt.meta_json.size()));
  os.write(ckpt.meta_json.data(), static_cast<std::streamsize>(ckpt.meta_json.size()));
  put_u32(os, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const NamedTensor& t : ckpt.tensors) {
    put_u32(os, static_cast<std::uint32_t>(t.name.size()));
    os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_u32(os, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) put_u32(os, static_cast<std::uint32_t>(d));
    if (t.data.size() != numel(t.shape)) {
      throw std::logic_error("checkpoint: tensor data does not match its shape");
    }
    put_f64_array(os, t.data);
  }
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  const std::uint32_t version = get_u32(is);
  if (version != kVersion) {
    throw std::runtime_error("checkpoint: unsupported format version");
  }
  Checkpoint ckpt;
  const std::uint32_t meta_len = get_u32(is);
  ckpt.meta_json.resize(meta_len);
  is.read(ckpt.meta_json.data(), meta_len);
  const std::uint32_t count = get_u32(is);
  ckpt.tensors.resize(count);
  for (NamedTensor& t : ckpt.tensors) {
    const std::uint32_t name_len = get_u32(is);
    t.name.resize(name_len);
    is.read(t.name.data(), name_len);
    const std::uint32_t rank = get_u32(is);
    t.shape.resize(rank);
    for (std::uint32_t i = 0; i < rank; ++i) t.shape[i] = static_cast<int>(get_u32(is));
    t.data.resize(numel(t.shape));
    get_f64_array(is, t.data);
  }
  if (!is) throw std::runtime_error("checkpoint: truncated file: " + path);
  return ckpt;
}

}  // namespace ttdsr::ad
