#include "checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "errors.hpp"

namespace ugcpl {

static_assert(std::endian::native == std::endian::little,
              "checkpoint i/o assumes a little-endian host");

namespace {

void write_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void write_u8(std::ostream& os, uint8_t v) { os.write(reinterpret_cast<const char*>(&v), 1); }

uint32_t read_u32(std::istream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  if (!is) throw IoError("checkpoint: truncated file");
  return v;
}

uint8_t read_u8(std::istream& is) {
  uint8_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 1);
  if (!is) throw IoError("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const Tensor*>>& entries) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("checkpoint: cannot open '" + path + "' for writing");
  os.write("UGCP", 4);
  write_u32(os, kCheckpointVersion);
  for (const auto& [name, tensor] : entries) {
    write_u32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u8(os, 0);  // dtype f32
    write_u32(os, static_cast<uint32_t>(tensor->shape.size()));
    for (int d : tensor->shape) write_u32(os, static_cast<uint32_t>(d));
    os.write(reinterpret_cast<const char*>(tensor->data.data()),
             static_cast<std::streamsize>(tensor->data.size() * sizeof(float)));
  }
  if (!os) throw IoError("checkpoint: write to '" + path + "' failed");
}

std::map<std::string, Tensor> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint: cannot open '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "UGCP", 4) != 0)
    throw IoError("checkpoint: '" + path + "' has wrong magic bytes");
  uint32_t version = read_u32(is);
  if (version != kCheckpointVersion)
    throw IoError("checkpoint: unsupported format version " + std::to_string(version));

  std::map<std::string, Tensor> out;
  while (true) {
    is.peek();
    if (is.eof()) break;
    uint32_t name_len = read_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw IoError("checkpoint: truncated name");
    uint8_t dtype = read_u8(is);
    if (dtype != 0) throw IoError("checkpoint: unsupported dtype tag " + std::to_string(dtype));
    uint32_t rank = read_u32(is);
    std::vector<int> shape(rank);
    for (auto& d : shape) d = static_cast<int>(read_u32(is));
    Tensor t(shape);
    is.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!is) throw IoError("checkpoint: truncated payload for '" + name + "'");
    out.emplace(std::move(name), std::move(t));
  }
  return out;
}

std::map<std::string, Tensor> filter_prefix(const std::map<std::string, Tensor>& all,
                                            const std::string& prefix) {
  std::map<std::string, Tensor> out;
  for (const auto& [k, v] : all)
    if (k.rfind(prefix, 0) == 0) out.emplace(k.substr(prefix.size()), v);
  return out;
}

}  // namespace ugcpl
