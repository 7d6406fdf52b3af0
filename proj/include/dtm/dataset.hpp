#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dtm/pgm.hpp"
#include "dtm/tensor.hpp"

namespace dtm {

// One video: grayscale frames plus per-frame ground-truth masks. For
// inference inputs only the first mask is required.
struct Sequence {
  std::string name;
  std::vector<GrayImage> frames;
  std::vector<std::optional<Mask>> masks;

  const Mask& mask(int t) const;  // IoError when absent
  int length() const { return static_cast<int>(frames.size()); }
};

// Loads root/<seq>/frames/%05d.pgm (+ masks/). Sequences sorted by name;
// frames are numbered contiguously from 00001. With require_all_masks every
// frame needs a mask, otherwise only the first.
std::vector<Sequence> load_dataset(const std::filesystem::path& root, bool require_all_masks);

Tensor image_to_tensor(const GrayImage& img);  // [h x w x 1], scaled to [0,1]

}  // namespace dtm
