#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "dtm/segnet.hpp"
#include "dtm/synth.hpp"

namespace dtm {

// Flat `key = value` configuration with documented defaults; unknown keys
// are rejected. CLI flags override file values.
struct Config {
  // model
  int d = 32;
  int k = 2;
  int ws = 3, hs = 3, wt = 3, ht = 3;
  std::string temporal_mode = "bidirectional";  // or "directed-next"
  int adj_rank = 0;                             // 0 -> d
  double lambda = 1.0;
  bool gap_mask_area = false;
  bool disable_short = false;
  bool disable_long = false;
  bool unweighted_adjacency = false;

  // training
  double lr = 1e-4;
  double lr_decay = 0.95;
  double weight_decay = 1e-5;
  int clip_len = 5;
  int epochs = 15;
  int batch_videos = 1;
  uint64_t seed = 1234;

  // synthetic data
  int synth_sequences = 20;
  int synth_frames = 24;
  int synth_size = 64;
  std::string synth_shapes = "both";
  double synth_velocity_min = 0.6;
  double synth_velocity_max = 1.8;
  double synth_drift = 1.5;
  double synth_occlusion_rate = 0.2;
  int synth_occlusion_len = 3;

  // evaluation
  double boundary_tol = 1.0;
  bool davis_tol = false;

  ModelConfig model() const;  // validates
  SynthConfig synth() const;
};

Config load_config(const std::filesystem::path& path);
void apply_kv(Config& cfg, const std::string& key, const std::string& value);

}  // namespace dtm
