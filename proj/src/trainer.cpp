#include "dtm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "dtm/adam.hpp"
#include "dtm/errors.hpp"
#include "dtm/gradcheck.hpp"
#include "dtm/rng.hpp"
#include "dtm/segnet.hpp"

namespace dtm {

namespace {

// Clip loss: the clip is treated as a short video. Its first frame seeds the
// hidden state and serves as the reference frame; every later frame is a
// query once, with ground-truth memory masks (teacher forcing).
Var clip_loss(Tape& tape, const ModelConfig& cfg, const Sequence& seq, int start, int len,
              const ParamVars& params) {
  std::vector<EncodedFrame> enc;
  enc.reserve(static_cast<size_t>(len));
  for (int i = 0; i < len; ++i)
    enc.push_back(encode(tape, image_to_tensor(seq.frames[static_cast<size_t>(start + i)]), params));

  const int h0 = seq.frames[static_cast<size_t>(start)].h;
  const int hf = enc[0].feat.val().dim(0);
  const int factor = h0 / hf;

  Var h = init_state(enc[0].feat, downsample_majority(seq.mask(start), factor), cfg.gap_mask_area);

  Var total = tape.constant(Tensor::scalar(0.0));
  for (int t = 2; t <= len; ++t) {
    const int m = std::min(cfg.graph.k, t - 1);
    std::vector<EncodedFrame> window(enc.begin() + (t - m - 1), enc.begin() + t);
    std::vector<Mask> memory;
    for (int i = t - m - 1; i < t - 1; ++i) memory.push_back(seq.mask(start + i));
    const Mask& gt = seq.mask(start + t - 1);

    StepInputs in;
    in.window = window;
    in.memory_masks = memory;
    in.h_prev = h;
    in.query_t = t;
    in.first = &enc[0];
    in.first_mask = &seq.mask(start);
    in.gt_query = &gt;
    StepResult res = segment_step(tape, cfg, in, params);
    h = res.h_state;
    total = add(total, res.loss);
  }
  return total;
}

}  // namespace

TrainStats train_model(const Config& cfg, const std::vector<Sequence>& data,
                       ParamStore& params, std::ostream* csv_log) {
  const ModelConfig mc = cfg.model();
  if (data.empty()) throw IoError("train: empty dataset");
  for (const Sequence& seq : data) {
    if (seq.length() < 2) throw IoError("train: sequence " + seq.name + " is too short");
    for (int t = 0; t < seq.length(); ++t) seq.mask(t);  // all masks must exist
  }

  // Frozen parameters stay out of the optimizer entirely (no decay).
  ParamStore live;
  for (const auto& [name, t] : params)
    live[name] = t;
  for (const std::string& name : frozen_params(mc)) live.erase(name);
  AdamState adam = adam_init(live);
  Rng clip_rng(Rng::mix(cfg.seed, 0x5eedc11bULL));
  TrainStats stats;

  auto take_step = [&](std::map<std::string, Tensor>& grads, double lr) {
    std::map<std::string, Tensor> live_grads;
    for (auto& [name, g] : grads)
      if (live.count(name)) live_grads[name] = std::move(g);
    adam_step(adam, live, live_grads, lr, cfg.weight_decay);
    for (auto& [name, t] : live) params[name] = t;
    ++stats.steps;
    grads.clear();
  };

  if (csv_log) *csv_log << "epoch,mean_loss,lr\n";
  double lr = cfg.lr;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    int clips = 0;
    std::map<std::string, Tensor> batch_grads;
    int in_batch = 0;
    for (const Sequence& seq : data) {
      const int len = std::min(cfg.clip_len, seq.length());
      const int start = clip_rng.uniform_int(seq.length() - len + 1);

      Tape tape;
      ParamVars vars = register_params(tape, params);
      Var loss = clip_loss(tape, mc, seq, start, len, vars);
      const double lv = loss.val().scalar_value();
      if (!std::isfinite(lv))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                           ", sequence " + seq.name);
      loss_sum += lv;
      ++clips;
      tape.backward(loss);

      for (const auto& [name, var] : vars.vars) {
        Tensor g = tape.grad_of(var);
        auto it = batch_grads.find(name);
        if (it == batch_grads.end()) {
          batch_grads[name] = std::move(g);
        } else {
          for (size_t i = 0; i < g.data.size(); ++i) it->second.data[i] += g.data[i];
        }
      }
      if (++in_batch == cfg.batch_videos) {
        take_step(batch_grads, lr);
        in_batch = 0;
      }
    }
    if (in_batch > 0) take_step(batch_grads, lr);  // trailing partial batch
    const double mean_loss = loss_sum / clips;
    stats.epoch_loss.push_back(mean_loss);
    stats.epoch_lr.push_back(lr);
    if (csv_log) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", epoch, mean_loss, lr);
      *csv_log << buf;
    }
    lr *= cfg.lr_decay;
  }
  return stats;
}

std::vector<Mask> infer_sequence(const Config& cfg, const ParamStore& params,
                                 const Sequence& seq) {
  const ModelConfig mc = cfg.model();
  if (seq.length() < 1) throw IoError("infer: empty sequence");
  const Mask& first_mask = seq.mask(0);

  std::vector<Mask> out;
  out.push_back(first_mask);
  if (seq.length() == 1) return out;

  const int h0 = seq.frames[0].h;

  // Encode every frame once; cached feature tensors are re-injected into the
  // per-step tapes as constants.
  struct CachedFrame {
    Tensor s1, s2, feat;
  };
  std::vector<CachedFrame> cache;
  cache.reserve(static_cast<size_t>(seq.length()));
  for (int t = 0; t < seq.length(); ++t) {
    Tape tape;
    ParamVars vars = register_params(tape, params);
    EncodedFrame enc = encode(tape, image_to_tensor(seq.frames[static_cast<size_t>(t)]), vars);
    cache.push_back({enc.s1.val(), enc.s2.val(), enc.feat.val()});
  }
  const int factor = h0 / cache[0].feat.dim(0);

  Tensor h_val;
  {
    Tape tape;
    Var feat = tape.constant(cache[0].feat);
    Var h = init_state(feat, downsample_majority(first_mask, factor), mc.gap_mask_area);
    h_val = h.val();
  }

  for (int t = 2; t <= seq.length(); ++t) {
    const int m = std::min(mc.graph.k, t - 1);
    Tape tape;
    ParamVars vars = register_params(tape, params);
    std::vector<EncodedFrame> window;
    std::vector<Mask> memory;
    for (int i = t - m - 1; i < t; ++i) {
      EncodedFrame f;
      f.s1 = tape.constant(cache[static_cast<size_t>(i)].s1);
      f.s2 = tape.constant(cache[static_cast<size_t>(i)].s2);
      f.feat = tape.constant(cache[static_cast<size_t>(i)].feat);
      window.push_back(f);
      if (i < t - 1) memory.push_back(out[static_cast<size_t>(i)]);
    }
    EncodedFrame first;
    first.s1 = tape.constant(cache[0].s1);
    first.s2 = tape.constant(cache[0].s2);
    first.feat = tape.constant(cache[0].feat);

    StepInputs in;
    in.window = window;
    in.memory_masks = memory;
    in.h_prev = tape.constant(h_val);
    in.query_t = t;
    in.first = &first;
    in.first_mask = &first_mask;
    in.gt_query = nullptr;
    StepResult res = segment_step(tape, mc, in, vars);
    h_val = res.h_state.val();
    out.push_back(res.predicted);
  }
  return out;
}

void infer_dataset(const Config& cfg, const ParamStore& params,
                   const std::vector<Sequence>& data,
                   const std::filesystem::path& out_root) {
  std::error_code ec;
  std::filesystem::create_directories(out_root, ec);
  if (ec) throw IoError("cannot create " + out_root.string());
  for (const Sequence& seq : data) {
    const std::filesystem::path dir = out_root / seq.name / "masks";
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string());
    const std::vector<Mask> masks = infer_sequence(cfg, params, seq);
    for (size_t t = 0; t < masks.size(); ++t) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%05zu.pgm", t + 1);
      write_pgm_mask(dir / buf, masks[t]);
    }
  }
}

double run_gradcheck(uint64_t seed, double eps) {
  // 2-frame 8x8 toy, d=4. The composition covers the edge weights, the
  // normalized graph filtering, the node classifier and its loss, the masked
  // pooling, one gate step, the attention map, fusion, decoding and both
  // losses. query_t = 3 so that the gate step over the memory frame is part
  // of the checked path.
  ModelConfig mc;
  mc.d = 4;
  mc.cin = 1;
  mc.graph.k = 2;
  mc.lambda = 1.0;
  mc.validate();

  Rng rng(Rng::mix(seed, 0x97adc4ecULL));
  const int n0 = 8;
  Tensor img1 = Tensor::zeros({n0, n0, 1});
  Tensor img2 = Tensor::zeros({n0, n0, 1});
  for (double& v : img1.data) v = rng.uniform(0.0, 1.0);
  for (double& v : img2.data) v = rng.uniform(0.0, 1.0);
  Mask m1(n0, n0), m2(n0, n0);
  for (int r = 2; r <= 5; ++r)
    for (int c = 2; c <= 5; ++c) m1.set(r, c, 1);
  for (int r = 2; r <= 5; ++r)
    for (int c = 3; c <= 6; ++c) m2.set(r, c, 1);

  ParamStore params = init_params(mc, seed);

  ForwardFn forward = [&](Tape& tape, const ParamVars& vars) -> Var {
    EncodedFrame e1 = encode(tape, img1, vars);
    EncodedFrame e2 = encode(tape, img2, vars);
    const int factor = n0 / e1.feat.val().dim(0);
    Var h1 = init_state(e1.feat, downsample_majority(m1, factor), mc.gap_mask_area);
    std::vector<EncodedFrame> window = {e1, e2};
    std::vector<Mask> memory = {m1};
    StepInputs in;
    in.window = window;
    in.memory_masks = memory;
    in.h_prev = h1;
    in.query_t = 3;
    in.first = &e1;
    in.first_mask = &m1;
    in.gt_query = &m2;
    StepResult res = segment_step(tape, mc, in, vars);
    return res.loss;
  };

  return grad_check(forward, params, eps);
}

}  // namespace dtm
