#include "dtm/synth.hpp"

#include <algorithm>
#include <cstdio>

#include "dtm/errors.hpp"
#include "dtm/pgm.hpp"
#include "dtm/rng.hpp"

namespace dtm {

void SynthConfig::validate() const {
  if (sequences < 1) throw ConfigError("synth: need at least one sequence");
  if (frames < 4) throw ConfigError("synth: need at least 4 frames per sequence");
  if (size < 8 || size % 4 != 0)
    throw ConfigError("synth: frame size must be >= 8 and divisible by 4, got " +
                      std::to_string(size));
  if (occlusion_rate < 0.0 || occlusion_rate > 1.0)
    throw ConfigError("synth: occlusion rate must be in [0,1]");
  if (occlusion_len < 1) throw ConfigError("synth: occlusion interval must be >= 1 frame");
  if (velocity_min < 0.0 || velocity_max < velocity_min)
    throw ConfigError("synth: bad velocity range");
  if (drift < 0.0) throw ConfigError("synth: drift must be >= 0");
}

ShapeKinds parse_shape_kinds(const std::string& s) {
  if (s == "disk") return ShapeKinds::Disk;
  if (s == "rectangle") return ShapeKinds::Rectangle;
  if (s == "both") return ShapeKinds::Both;
  throw ConfigError("synth: shapes must be disk, rectangle or both, got '" + s + "'");
}

namespace {

std::string frame_name(int t) {  // 1-based
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05d.pgm", t);
  return buf;
}

// Bilinear value noise on a coarse lattice; uses only +,-,*,/ so frames are
// identical on every IEEE-754 platform.
struct Background {
  int size, cells, cell;
  std::vector<double> lattice;  // (cells+1)^2

  Background(int sz, Rng& rng) : size(sz), cells(4), cell(sz / 4) {
    lattice.resize(static_cast<size_t>(cells + 1) * (cells + 1));
    for (double& v : lattice) v = rng.uniform(25.0, 95.0);
  }

  double at(int x, int y) const {
    const int gx = x / cell, gy = y / cell;
    const double fx = static_cast<double>(x - gx * cell) / cell;
    const double fy = static_cast<double>(y - gy * cell) / cell;
    auto l = [&](int ix, int iy) {
      return lattice[static_cast<size_t>(iy) * (cells + 1) + ix];
    };
    const double top = l(gx, gy) * (1.0 - fx) + l(gx + 1, gy) * fx;
    const double bot = l(gx, gy + 1) * (1.0 - fx) + l(gx + 1, gy + 1) * fx;
    return top * (1.0 - fy) + bot * fy;
  }
};

uint8_t to_byte(double v) {
  const double c = std::min(std::max(v, 0.0), 255.0);
  return static_cast<uint8_t>(c + 0.5);
}

}  // namespace

void synth_generate(const SynthConfig& cfg, const std::filesystem::path& out_root) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_root, ec);
  if (ec) throw IoError("cannot create " + out_root.string());

  for (int s = 0; s < cfg.sequences; ++s) {
    Rng rng(Rng::mix(cfg.seed, static_cast<uint64_t>(s)));
    char name[16];
    std::snprintf(name, sizeof(name), "seq%03d", s);
    const std::filesystem::path seq_dir = out_root / name;
    std::filesystem::create_directories(seq_dir / "frames", ec);
    std::filesystem::create_directories(seq_dir / "masks", ec);
    if (ec) throw IoError("cannot create " + seq_dir.string());

    Background bg(cfg.size, rng);

    bool disk;
    switch (cfg.shapes) {
      case ShapeKinds::Disk: disk = true; break;
      case ShapeKinds::Rectangle: disk = false; break;
      default: disk = rng.bernoulli(0.5); break;
    }
    const double lo = cfg.size / 8.0, hi = cfg.size / 5.0;
    const double radius = rng.uniform(lo, hi);       // disk radius
    const double half_x = rng.uniform(lo, hi);       // rectangle half extents
    const double half_y = rng.uniform(lo, hi);
    const double extent = disk ? radius : std::max(half_x, half_y);
    const double margin = extent + 2.0;

    double cx = rng.uniform(margin, cfg.size - margin);
    double cy = rng.uniform(margin, cfg.size - margin);
    double vx = rng.uniform(cfg.velocity_min, cfg.velocity_max) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
    double vy = rng.uniform(cfg.velocity_min, cfg.velocity_max) * (rng.bernoulli(0.5) ? 1.0 : -1.0);

    const double base = rng.uniform(185.0, 235.0);
    const double step = rng.uniform(-cfg.drift, cfg.drift);

    const bool occluded_seq = rng.bernoulli(cfg.occlusion_rate);
    const int occ_start = cfg.frames / 2;  // 0-based; never the first frame
    const int occ_end = std::min(occ_start + cfg.occlusion_len, cfg.frames);

    for (int t = 0; t < cfg.frames; ++t) {
      const bool hidden = occluded_seq && t >= occ_start && t < occ_end;
      const double intensity = std::min(std::max(base + step * t, 150.0), 250.0);

      GrayImage img(cfg.size, cfg.size);
      Mask mask(cfg.size, cfg.size);
      for (int y = 0; y < cfg.size; ++y)
        for (int x = 0; x < cfg.size; ++x) {
          double v = bg.at(x, y);
          bool inside = false;
          if (!hidden) {
            const double dx = x - cx, dy = y - cy;
            inside = disk ? (dx * dx + dy * dy <= radius * radius)
                          : (dx >= -half_x && dx <= half_x && dy >= -half_y && dy <= half_y);
          }
          if (inside) {
            v = intensity;
            mask.set(y, x, 1);
          }
          img.set(y, x, to_byte(v));
        }

      write_pgm(seq_dir / "frames" / frame_name(t + 1), img);
      write_pgm_mask(seq_dir / "masks" / frame_name(t + 1), mask);

      cx += vx;
      cy += vy;
      if (cx < margin) { cx = margin; vx = -vx; }
      if (cx > cfg.size - margin) { cx = cfg.size - margin; vx = -vx; }
      if (cy < margin) { cy = margin; vy = -vy; }
      if (cy > cfg.size - margin) { cy = cfg.size - margin; vy = -vy; }
    }
  }
}

}  // namespace dtm
