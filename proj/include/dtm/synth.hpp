#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace dtm {

enum class ShapeKinds { Disk, Rectangle, Both };

// Seeded moving-shapes generator: one high-contrast shape per sequence on a
// smooth textured background, with an optional scripted full-occlusion
// interval in the middle of the sequence. Layout on disk:
//   root/<seq>/frames/%05d.pgm and root/<seq>/masks/%05d.pgm, from 00001.
struct SynthConfig {
  int sequences = 20;
  int frames = 24;
  int size = 64;  // square frames, divisible by 4
  ShapeKinds shapes = ShapeKinds::Both;
  double velocity_min = 0.6;
  double velocity_max = 1.8;
  double drift = 1.5;            // max per-frame intensity drift, gray levels
  double occlusion_rate = 0.2;   // probability a sequence is occluded
  int occlusion_len = 3;         // scripted interval length, starts at frames/2
  uint64_t seed = 1234;

  void validate() const;  // throws ConfigError
};

ShapeKinds parse_shape_kinds(const std::string& s);  // disk|rectangle|both

void synth_generate(const SynthConfig& cfg, const std::filesystem::path& out_root);

}  // namespace dtm
