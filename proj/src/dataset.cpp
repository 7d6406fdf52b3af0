#include "dtm/dataset.hpp"

#include <algorithm>
#include <cstdio>

#include "dtm/errors.hpp"

namespace dtm {

const Mask& Sequence::mask(int t) const {
  if (t < 0 || t >= length() || !masks[static_cast<size_t>(t)])
    throw IoError("sequence " + name + ": missing mask for frame " + std::to_string(t + 1));
  return *masks[static_cast<size_t>(t)];
}

namespace {

std::string frame_name(int t) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05d.pgm", t);
  return buf;
}

}  // namespace

std::vector<Sequence> load_dataset(const std::filesystem::path& root, bool require_all_masks) {
  if (!std::filesystem::is_directory(root)) throw IoError("not a directory: " + root.string());
  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(root))
    if (entry.is_directory() && std::filesystem::is_directory(entry.path() / "frames"))
      names.push_back(entry.path().filename().string());
  std::sort(names.begin(), names.end());
  if (names.empty()) throw IoError("no sequences under " + root.string());

  std::vector<Sequence> out;
  std::vector<std::string> missing;
  for (const std::string& name : names) {
    Sequence seq;
    seq.name = name;
    const std::filesystem::path frames = root / name / "frames";
    const std::filesystem::path masks = root / name / "masks";
    for (int t = 1;; ++t) {
      const std::filesystem::path f = frames / frame_name(t);
      if (!std::filesystem::exists(f)) break;
      seq.frames.push_back(read_pgm(f));
      const std::filesystem::path m = masks / frame_name(t);
      if (std::filesystem::exists(m)) {
        seq.masks.push_back(read_pgm_mask(m));
      } else {
        seq.masks.push_back(std::nullopt);
        if (require_all_masks || t == 1) missing.push_back(m.string());
      }
    }
    if (seq.frames.empty()) {
      missing.push_back((frames / frame_name(1)).string());
      continue;
    }
    for (size_t t = 0; t < seq.frames.size(); ++t) {
      const GrayImage& img = seq.frames[t];
      if (img.w != seq.frames[0].w || img.h != seq.frames[0].h)
        throw IoError("sequence " + name + ": frame dimensions vary");
      if (seq.masks[t] && (seq.masks[t]->w != img.w || seq.masks[t]->h != img.h))
        throw IoError("sequence " + name + ": mask dimensions do not match the frame");
    }
    out.push_back(std::move(seq));
  }
  if (!missing.empty()) {
    std::string msg = "missing files:";
    for (const std::string& m : missing) msg += "\n  " + m;
    throw IoError(msg);
  }
  return out;
}

Tensor image_to_tensor(const GrayImage& img) {
  Tensor t = Tensor::zeros({img.h, img.w, 1});
  for (size_t i = 0; i < img.pixels.size(); ++i) t.data[i] = img.pixels[i] / 255.0;
  return t;
}

}  // namespace dtm
