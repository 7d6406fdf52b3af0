#include "dtm/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "dtm/errors.hpp"
#include "dtm/pgm.hpp"

namespace dtm {

namespace {

constexpr char kMagic[4] = {'D', 'T', 'M', 'N'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct Reader {
  const std::string& b;
  size_t p = 0;
  const std::filesystem::path& path;

  void need(size_t n, const char* what) {
    if (b.size() - p < n)
      throw CheckpointError(path.string() + ": truncated checkpoint reading " + what +
                            " at offset " + std::to_string(p));
  }
  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(b[p + i])) << (8 * i);
    p += 4;
    return v;
  }
  double f64(const char* what) {
    need(8, what);
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(static_cast<uint8_t>(b[p + i])) << (8 * i);
    p += 8;
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
  std::string str(size_t n, const char* what) {
    need(n, what);
    std::string s = b.substr(p, n);
    p += n;
    return s;
  }
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params) {
  std::string out(kMagic, 4);
  put_u32(out, kVersion);
  for (const auto& [name, t] : params) {  // std::map: lexicographic order
    put_u32(out, static_cast<uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<uint32_t>(t.dims.size()));
    for (int d : t.dims) put_u32(out, static_cast<uint32_t>(d));
    for (double v : t.data) put_f64(out, v);
  }
  write_file_atomic(path, out);
}

ParamStore load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r{bytes, 0, path};
  const std::string magic = r.str(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0)
    throw CheckpointError(path.string() + ": bad magic, not a checkpoint");
  const uint32_t version = r.u32("version");
  if (version != kVersion)
    throw CheckpointError(path.string() + ": unsupported checkpoint version " +
                          std::to_string(version));
  ParamStore params;
  while (r.p < bytes.size()) {
    const uint32_t name_len = r.u32("name length");
    if (name_len == 0 || name_len > 4096)
      throw CheckpointError(path.string() + ": implausible name length");
    const std::string name = r.str(name_len, "name");
    const uint32_t rank = r.u32("rank");
    if (rank == 0 || rank > 8) throw CheckpointError(path.string() + ": implausible rank");
    std::vector<int> dims;
    int64_t numel = 1;
    for (uint32_t i = 0; i < rank; ++i) {
      const uint32_t d = r.u32("dim");
      if (d == 0 || d > (1u << 24)) throw CheckpointError(path.string() + ": implausible dim");
      dims.push_back(static_cast<int>(d));
      numel *= d;
    }
    Tensor t = Tensor::zeros(dims);
    for (int64_t i = 0; i < numel; ++i) t.data[static_cast<size_t>(i)] = r.f64("value");
    if (params.count(name))
      throw CheckpointError(path.string() + ": duplicate parameter " + name);
    params[name] = std::move(t);
  }
  return params;
}

void validate_against(const ParamStore& loaded, const ParamStore& expected) {
  for (const auto& [name, t] : expected) {
    auto it = loaded.find(name);
    if (it == loaded.end()) throw CheckpointError("checkpoint is missing parameter " + name);
    if (it->second.dims != t.dims)
      throw CheckpointError("checkpoint parameter " + name + " has dims " +
                            it->second.dims_str() + ", model expects " + t.dims_str());
  }
  for (const auto& [name, t] : loaded)
    if (!expected.count(name))
      throw CheckpointError("checkpoint has unexpected parameter " + name);
}

}  // namespace dtm
