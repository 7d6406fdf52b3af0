#pragma once

#include <span>

#include "dtm/longmem.hpp"
#include "dtm/mask.hpp"
#include "dtm/params.hpp"
#include "dtm/stgraph.hpp"

namespace dtm {

// Model hyperparameters shared by training, inference and checkpoints.
// Parameter tensors (lexicographic names):
//   adj.w1, adj.w2   [r x d]      edge-weight projections
//   dec.fuse         [1x1x(2d+2)xd]
//   dec.head         [1x1xu2x2]
//   dec.up1          [3x3x(d+32)xd]
//   dec.up2          [3x3x(d+16)xu2],  u2 = max(2, d/2)
//   enc.stage1       [3x3xcinx16]  stride 1
//   enc.stage2       [3x3x16x32]   stride 2
//   enc.stage3       [3x3x32xd]    stride 2
//   gcn.head         [d x 2]
//   gru.w            [d x 2d]
struct ModelConfig {
  int d = 32;
  int cin = 1;
  GraphConfig graph;  // w/h filled per input at run time
  int adj_rank = 0;   // 0 -> use d
  double lambda = 1.0;
  bool disable_short = false;        // raw X_t replaces X_gcf, l_sem == 0
  bool disable_long = false;         // all-ones attention, state never advanced
  bool unweighted_adjacency = false;  // A(i,j) = sigmoid(x_i^T x_j); w1/w2 frozen
  bool gap_mask_area = false;        // mask-area GAP denominator instead of h*w

  int rank() const { return adj_rank > 0 ? adj_rank : d; }
  int up2_channels() const { return d / 2 > 2 ? d / 2 : 2; }
  void validate() const;
};

// Seeded fan-based uniform initialization, drawn in lexicographic name
// order so checkpoints of fresh models are canonical.
ParamStore init_params(const ModelConfig& cfg, uint64_t seed);

// Parameters that the optimizer must not touch under the active ablations.
std::vector<std::string> frozen_params(const ModelConfig& cfg);

struct EncodedFrame {
  Var s1;    // [h0 x w0 x 16]
  Var s2;    // [h0/2 x w0/2 x 32]
  Var feat;  // [h0/4 x w0/4 x d]
};

// Three conv stages with ReLU; overall stride 4. Frame dims must be
// divisible by 4.
EncodedFrame encode(Tape& tape, const Tensor& image, const ParamVars& params);

// Per-location correlation of query features with the hidden state.
Var attention(Var query_feat, Var h);

// Fixed concatenation order att | x_gcf | m1 | x1, then the 1x1 fusion conv.
Var fuse(Var att, Var x_gcf, const Mask& m1_featres, Var x1, const ParamVars& params);

// Two up-stages with encoder skips, 1x1 head, per-pixel softmax.
// Output is [h0 x w0 x 2] with rows summing to 1 per pixel.
Var decode(Var fused, const EncodedFrame& skips, const ParamVars& params);

Var loss_sup(Var probs, const Mask& gt);

// L = l_sem + lambda * l_sup; lambda must be positive.
Var total_loss(Var l_sem, Var l_sup, double lambda);

// Argmax over the two classes; ties go to background.
Mask mask_from_probs(const Tensor& probs);

struct StepInputs {
  std::span<const EncodedFrame> window;  // oldest..query
  std::span<const Mask> memory_masks;    // full resolution, one per memory frame
  Var h_prev;                            // state summarizing frames up to t-2
  int query_t = 2;                       // 1-based; the state advances iff t >= 3
  const EncodedFrame* first = nullptr;   // reference frame features
  const Mask* first_mask = nullptr;      // full resolution
  const Mask* gt_query = nullptr;        // null at inference: losses skipped
};

struct StepResult {
  Var probs;      // [h0 x w0 x 2]
  Var gcn_probs;  // node classifier output (invalid when short memory is off)
  Var l_sem;      // valid iff gt_query was provided
  Var l_sup;
  Var loss;       // l_sem + lambda * l_sup
  Var h_state;    // state after consuming frame t-1
  Mask predicted;
};

// One full query step: graph filtering over the window, state advance,
// attention, fusion, decoding and the losses.
StepResult segment_step(Tape& tape, const ModelConfig& cfg, const StepInputs& in,
                        const ParamVars& params);

}  // namespace dtm
