#include "dtm/config.hpp"

#include <fstream>

#include "dtm/errors.hpp"

namespace dtm {

ModelConfig Config::model() const {
  ModelConfig m;
  m.d = d;
  m.cin = 1;
  m.graph.k = k;
  m.graph.ws = ws;
  m.graph.hs = hs;
  m.graph.wt = wt;
  m.graph.ht = ht;
  if (temporal_mode == "bidirectional") {
    m.graph.temporal_mode = TemporalMode::Bidirectional;
  } else if (temporal_mode == "directed-next") {
    m.graph.temporal_mode = TemporalMode::DirectedNext;
  } else {
    throw ConfigError("temporal_mode must be bidirectional or directed-next, got '" +
                      temporal_mode + "'");
  }
  m.adj_rank = adj_rank;
  m.lambda = lambda;
  m.disable_short = disable_short;
  m.disable_long = disable_long;
  m.unweighted_adjacency = unweighted_adjacency;
  m.gap_mask_area = gap_mask_area;
  m.validate();
  if (k < 1) throw ConfigError("k must be >= 1");
  GraphConfig probe = m.graph;
  probe.w = 4;
  probe.h = 4;
  probe.validate();
  if (clip_len < 2) throw ConfigError("clip_len must be >= 2");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_videos < 1) throw ConfigError("batch_videos must be >= 1");
  if (lr <= 0.0) throw ConfigError("lr must be positive");
  if (lr_decay <= 0.0 || lr_decay > 1.0) throw ConfigError("lr_decay must be in (0,1]");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  return m;
}

SynthConfig Config::synth() const {
  SynthConfig s;
  s.sequences = synth_sequences;
  s.frames = synth_frames;
  s.size = synth_size;
  s.shapes = parse_shape_kinds(synth_shapes);
  s.velocity_min = synth_velocity_min;
  s.velocity_max = synth_velocity_max;
  s.drift = synth_drift;
  s.occlusion_rate = synth_occlusion_rate;
  s.occlusion_len = synth_occlusion_len;
  s.seed = seed;
  s.validate();
  return s;
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    int r = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    unsigned long long r = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<uint64_t>(r);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected an unsigned integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

}  // namespace

void apply_kv(Config& c, const std::string& key, const std::string& value) {
  if (key == "d") c.d = to_int(key, value);
  else if (key == "k") c.k = to_int(key, value);
  else if (key == "ws") c.ws = to_int(key, value);
  else if (key == "hs") c.hs = to_int(key, value);
  else if (key == "wt") c.wt = to_int(key, value);
  else if (key == "ht") c.ht = to_int(key, value);
  else if (key == "temporal_mode") c.temporal_mode = value;
  else if (key == "adj_rank") c.adj_rank = to_int(key, value);
  else if (key == "lambda") c.lambda = to_double(key, value);
  else if (key == "gap_mask_area") c.gap_mask_area = to_bool(key, value);
  else if (key == "disable_short") c.disable_short = to_bool(key, value);
  else if (key == "disable_long") c.disable_long = to_bool(key, value);
  else if (key == "unweighted_adjacency") c.unweighted_adjacency = to_bool(key, value);
  else if (key == "lr") c.lr = to_double(key, value);
  else if (key == "lr_decay") c.lr_decay = to_double(key, value);
  else if (key == "weight_decay") c.weight_decay = to_double(key, value);
  else if (key == "clip_len") c.clip_len = to_int(key, value);
  else if (key == "epochs") c.epochs = to_int(key, value);
  else if (key == "batch_videos") c.batch_videos = to_int(key, value);
  else if (key == "seed") c.seed = to_u64(key, value);
  else if (key == "synth_sequences") c.synth_sequences = to_int(key, value);
  else if (key == "synth_frames") c.synth_frames = to_int(key, value);
  else if (key == "synth_size") c.synth_size = to_int(key, value);
  else if (key == "synth_shapes") c.synth_shapes = value;
  else if (key == "synth_velocity_min") c.synth_velocity_min = to_double(key, value);
  else if (key == "synth_velocity_max") c.synth_velocity_max = to_double(key, value);
  else if (key == "synth_drift") c.synth_drift = to_double(key, value);
  else if (key == "synth_occlusion_rate") c.synth_occlusion_rate = to_double(key, value);
  else if (key == "synth_occlusion_len") c.synth_occlusion_len = to_int(key, value);
  else if (key == "boundary_tol") c.boundary_tol = to_double(key, value);
  else if (key == "davis_tol") c.davis_tol = to_bool(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  Config c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    apply_kv(c, key, value);
  }
  return c;
}

}  // namespace dtm
