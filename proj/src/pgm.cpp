#include "dtm/pgm.hpp"

#include <fstream>
#include <string>

#include "dtm/errors.hpp"

namespace dtm {

namespace {

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

[[noreturn]] void fail(const std::filesystem::path& path, size_t offset, const std::string& what) {
  throw IoError(path.string() + ": " + what + " (byte offset " + std::to_string(offset) + ")");
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f'; }

// Whitespace and '#' comments per the NetPBM grammar.
void skip_ws(const std::string& b, size_t& p) {
  while (p < b.size()) {
    if (is_space(b[p])) {
      ++p;
    } else if (b[p] == '#') {
      while (p < b.size() && b[p] != '\n') ++p;
    } else {
      return;
    }
  }
}

int parse_int(const std::filesystem::path& path, const std::string& b, size_t& p) {
  skip_ws(b, p);
  if (p >= b.size() || b[p] < '0' || b[p] > '9') fail(path, p, "expected a decimal number");
  long v = 0;
  while (p < b.size() && b[p] >= '0' && b[p] <= '9') {
    v = v * 10 + (b[p] - '0');
    if (v > 1000000000L) fail(path, p, "number out of range");
    ++p;
  }
  return static_cast<int>(v);
}

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
  const std::string b = read_all(path);
  size_t p = 0;
  if (b.size() < 2 || b[0] != 'P' || b[1] != '5') {
    if (b.size() >= 2 && b[0] == 'P')
      fail(path, 0, std::string("unsupported NetPBM type P") + b[1] + ", only binary P5 is accepted");
    fail(path, 0, "not a P5 PGM file");
  }
  p = 2;
  const int w = parse_int(path, b, p);
  const int h = parse_int(path, b, p);
  const int maxval = parse_int(path, b, p);
  if (w <= 0 || h <= 0 || static_cast<int64_t>(w) * h > (int64_t{1} << 30))
    fail(path, p, "unreasonable image dimensions");
  if (maxval != 255) fail(path, p, "maxval must be 255, got " + std::to_string(maxval));
  if (p >= b.size() || !is_space(b[p])) fail(path, p, "expected whitespace before payload");
  ++p;  // exactly one whitespace byte separates header and payload
  const size_t need = static_cast<size_t>(w) * static_cast<size_t>(h);
  if (b.size() - p < need)
    fail(path, b.size(), "truncated payload: need " + std::to_string(need) + " bytes, have " +
                             std::to_string(b.size() - p));
  GrayImage img(w, h);
  for (size_t i = 0; i < need; ++i) img.pixels[i] = static_cast<uint8_t>(b[p + i]);
  return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::string bytes = "P5\n" + std::to_string(img.w) + " " + std::to_string(img.h) + "\n255\n";
  bytes.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  write_file_atomic(path, bytes);
}

Mask read_pgm_mask(const std::filesystem::path& path) {
  GrayImage img = read_pgm(path);
  Mask m(img.w, img.h);
  for (size_t i = 0; i < img.pixels.size(); ++i) m.v[i] = img.pixels[i] >= 128 ? 1 : 0;
  return m;
}

void write_pgm_mask(const std::filesystem::path& path, const Mask& mask) {
  GrayImage img(mask.w, mask.h);
  for (size_t i = 0; i < mask.v.size(); ++i) img.pixels[i] = mask.v[i] ? 255 : 0;
  write_pgm(path, img);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string());
}

}  // namespace dtm
