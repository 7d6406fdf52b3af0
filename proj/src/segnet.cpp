#include "dtm/segnet.hpp"

#include <cmath>

#include "dtm/errors.hpp"
#include "dtm/rng.hpp"

namespace dtm {

void ModelConfig::validate() const {
  if (d < 2) throw ConfigError("model: d must be >= 2");
  if (cin < 1) throw ConfigError("model: cin must be >= 1");
  if (adj_rank < 0) throw ConfigError("model: adj_rank must be >= 0");
  if (lambda <= 0.0) throw ConfigError("model: lambda must be positive");
  if (unweighted_adjacency && adj_rank != 0 && adj_rank != d)
    throw ConfigError("model: unweighted adjacency requires rank == d");
}

namespace {

// fan_in/fan_out for conv kernels [kh x kw x cin x cout] and matrices
// [out x in] applied as x -> M x.
void fans(const std::string& name, const std::vector<int>& dims, int& fan_in, int& fan_out) {
  if (dims.size() == 4) {
    fan_in = dims[0] * dims[1] * dims[2];
    fan_out = dims[0] * dims[1] * dims[3];
  } else if (name == "gcn.head") {  // applied as x^T M: [d x 2]
    fan_in = dims[0];
    fan_out = dims[1];
  } else {
    fan_in = dims[1];
    fan_out = dims[0];
  }
}

}  // namespace

ParamStore init_params(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  const int d = cfg.d, r = cfg.rank(), u2 = cfg.up2_channels();
  ParamStore shapes;
  shapes["adj.w1"] = Tensor::zeros({r, d});
  shapes["adj.w2"] = Tensor::zeros({r, d});
  shapes["dec.fuse"] = Tensor::zeros({1, 1, 2 * d + 2, d});
  shapes["dec.head"] = Tensor::zeros({1, 1, u2, 2});
  shapes["dec.up1"] = Tensor::zeros({3, 3, d + 32, d});
  shapes["dec.up2"] = Tensor::zeros({3, 3, d + 16, u2});
  shapes["enc.stage1"] = Tensor::zeros({3, 3, cfg.cin, 16});
  shapes["enc.stage2"] = Tensor::zeros({3, 3, 16, 32});
  shapes["enc.stage3"] = Tensor::zeros({3, 3, 32, d});
  shapes["gcn.head"] = Tensor::zeros({d, 2});
  shapes["gru.w"] = Tensor::zeros({d, 2 * d});

  Rng rng(seed);
  for (auto& [name, t] : shapes) {
    int fan_in = 0, fan_out = 0;
    fans(name, t.dims, fan_in, fan_out);
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& x : t.data) x = rng.uniform(-s, s);
  }
  return shapes;
}

std::vector<std::string> frozen_params(const ModelConfig& cfg) {
  if (cfg.unweighted_adjacency) return {"adj.w1", "adj.w2"};
  return {};
}

EncodedFrame encode(Tape& tape, const Tensor& image, const ParamVars& params) {
  if (image.rank() != 3) throw InputError("encode: expected an [h x w x c] image");
  if (image.dim(0) % 4 != 0 || image.dim(1) % 4 != 0)
    throw InputError("encode: frame dims must be divisible by 4, got " + image.dims_str());
  Var img = tape.constant(image);
  EncodedFrame out;
  out.s1 = relu(conv2d(img, params.at("enc.stage1"), 1, Pad::Same));
  out.s2 = relu(conv2d(out.s1, params.at("enc.stage2"), 2, Pad::Same));
  out.feat = relu(conv2d(out.s2, params.at("enc.stage3"), 2, Pad::Same));
  return out;
}

Var attention(Var query_feat, Var h) { return channel_dot(query_feat, h); }

Var fuse(Var att, Var x_gcf, const Mask& m1_featres, Var x1, const ParamVars& params) {
  const Tensor& xv = x_gcf.val();
  if (m1_featres.h != xv.dim(0) || m1_featres.w != xv.dim(1))
    throw ShapeError("fuse: first-frame mask dims do not match the feature grid");
  Tape& tape = *x_gcf.tape();
  Var m1 = tape.constant(mask_to_channel(m1_featres));
  std::vector<Var> parts = {att, x_gcf, m1, x1};
  Var cat = concat_channels(parts);
  return relu(conv2d(cat, params.at("dec.fuse"), 1, Pad::Same));
}

Var decode(Var fused, const EncodedFrame& skips, const ParamVars& params) {
  Var x = fused;
  {
    Var up = upsample2x(x);
    std::vector<Var> parts = {up, skips.s2};
    x = relu(conv2d(concat_channels(parts), params.at("dec.up1"), 1, Pad::Same));
  }
  {
    Var up = upsample2x(x);
    std::vector<Var> parts = {up, skips.s1};
    x = relu(conv2d(concat_channels(parts), params.at("dec.up2"), 1, Pad::Same));
  }
  Var logits = conv2d(x, params.at("dec.head"), 1, Pad::Same);
  const Tensor& lv = logits.val();
  const int h0 = lv.dim(0), w0 = lv.dim(1);
  Var probs = softmax(reshape(logits, {h0 * w0, 2}));
  return reshape(probs, {h0, w0, 2});
}

Var loss_sup(Var probs, const Mask& gt) {
  const Tensor& pv = probs.val();
  if (pv.rank() != 3 || pv.dim(2) != 2 || pv.dim(0) != gt.h || pv.dim(1) != gt.w)
    throw ShapeError("loss_sup: probs " + pv.dims_str() + " vs mask " + std::to_string(gt.w) +
                     "x" + std::to_string(gt.h));
  Var flat = reshape(probs, {gt.h * gt.w, 2});
  std::vector<uint8_t> all(static_cast<size_t>(gt.h) * gt.w, 1);
  return cross_entropy(flat, mask_to_labels(gt), all);
}

Var total_loss(Var l_sem, Var l_sup, double lambda) {
  if (lambda <= 0.0) throw ConfigError("total_loss: lambda must be positive");
  return add(l_sem, scale(l_sup, lambda));
}

Mask mask_from_probs(const Tensor& probs) {
  if (probs.rank() != 3 || probs.dim(2) != 2)
    throw ShapeError("mask_from_probs: expected [h x w x 2], got " + probs.dims_str());
  Mask m(probs.dim(1), probs.dim(0));
  for (int r = 0; r < probs.dim(0); ++r)
    for (int c = 0; c < probs.dim(1); ++c)
      m.set(r, c, probs(r, c, 1) > probs(r, c, 0) ? 1 : 0);
  return m;
}

namespace {

NodeLabels rasterize_labels(std::span<const Mask> memory_masks_featres, int frames, int w, int h) {
  NodeLabels out;
  const size_t n = static_cast<size_t>(frames) * w * h;
  out.cls.assign(n, 0);
  out.labeled.assign(n, 0);
  for (size_t f = 0; f < memory_masks_featres.size(); ++f) {
    const Mask& m = memory_masks_featres[f];
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        const size_t i = (f * h + r) * w + c;
        out.cls[i] = m.at(r, c);
        out.labeled[i] = 1;
      }
  }
  return out;
}

}  // namespace

StepResult segment_step(Tape& tape, const ModelConfig& cfg, const StepInputs& in,
                        const ParamVars& params) {
  if (in.window.empty() || in.window.size() != in.memory_masks.size() + 1)
    throw InputError("segment_step: window must hold the memory frames plus the query");
  if (!in.first || !in.first_mask) throw InputError("segment_step: missing reference frame");
  const EncodedFrame& query = in.window.back();
  const Tensor& qf = query.feat.val();
  const int h = qf.dim(0), w = qf.dim(1);
  const int factor_h = in.first_mask->h / h;

  StepResult res;

  // Long-term memory: advance over frame t-1, then correlate.
  Var att;
  if (cfg.disable_long) {
    res.h_state = in.h_prev;
    att = tape.constant(Tensor::full({h, w, 1}, 1.0));
  } else {
    if (in.query_t >= 3) {
      const EncodedFrame& prev = in.window[in.window.size() - 2];
      Mask mprev = downsample_majority(in.memory_masks.back(), factor_h);
      res.h_state = advance(in.h_prev, prev.feat, mprev, params.at("gru.w"), cfg.gap_mask_area);
    } else {
      res.h_state = in.h_prev;
    }
    att = attention(query.feat, res.h_state);
  }

  // Short-term memory: graph filtering of the window features.
  Var x_gcf_map;
  bool have_sem = false;
  if (cfg.disable_short) {
    x_gcf_map = query.feat;
  } else {
    GraphConfig gc = cfg.graph;
    gc.k = static_cast<int>(in.window.size()) - 1;
    gc.w = w;
    gc.h = h;
    StGraphPtr g = make_graph(gc);
    std::vector<Var> feats;
    for (const EncodedFrame& f : in.window) feats.push_back(f.feat);
    Var x = rasterize_features(feats);
    Var x_gcf;
    if (g->edge_count() == 0) {
      x_gcf = x;  // normalized matrix is the identity
    } else {
      Var a = cfg.unweighted_adjacency
                  ? edge_weights_unweighted(g, x)
                  : edge_weights(g, x, params.at("adj.w1"), params.at("adj.w2"));
      NormalizedAdjacency norm = normalize(g, a);
      x_gcf = gcf(g, norm, x);
    }
    res.gcn_probs = gcn_classify(x_gcf, params.at("gcn.head"));
    if (in.gt_query) {
      std::vector<Mask> mm;
      for (const Mask& m : in.memory_masks) mm.push_back(downsample_majority(m, factor_h));
      NodeLabels labels = rasterize_labels(mm, g->frames, w, h);
      res.l_sem = loss_sem(res.gcn_probs, labels);
      have_sem = true;
    }
    x_gcf_map = query_features(x_gcf, *g);
  }

  Mask m1_feat = downsample_majority(*in.first_mask, factor_h);
  Var fused = fuse(att, x_gcf_map, m1_feat, in.first->feat, params);
  res.probs = decode(fused, query, params);
  res.predicted = mask_from_probs(res.probs.val());

  if (in.gt_query) {
    if (!have_sem) res.l_sem = tape.constant(Tensor::scalar(0.0));
    res.l_sup = loss_sup(res.probs, *in.gt_query);
    res.loss = total_loss(res.l_sem, res.l_sup, cfg.lambda);
  }
  return res;
}

}  // namespace dtm
