#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dtm/mask.hpp"

namespace dtm {

// 8-bit grayscale frame.
struct GrayImage {
  int w = 0, h = 0;
  std::vector<uint8_t> pixels;  // row-major

  GrayImage() = default;
  GrayImage(int width, int height)
      : w(width), h(height), pixels(static_cast<size_t>(width) * height, 0) {}
  uint8_t at(int r, int c) const { return pixels[static_cast<size_t>(r) * w + c]; }
  void set(int r, int c, uint8_t v) { pixels[static_cast<size_t>(r) * w + c] = v; }
};

// Binary NetPBM P5, maxval 255 only. Malformed input raises IoError with the
// byte offset of the failure.
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& img);

// Masks are stored as 0/255 and read back with threshold >= 128.
Mask read_pgm_mask(const std::filesystem::path& path);
void write_pgm_mask(const std::filesystem::path& path, const Mask& mask);

// Write-to-temp, rename-on-success.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace dtm
