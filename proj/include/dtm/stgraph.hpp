#pragma once

#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "dtm/ops.hpp"
#include "dtm/tape.hpp"

namespace dtm {

enum class TemporalMode { DirectedNext, Bidirectional };

// Windowed spatial-temporal graph over (k+1) frames of a w x h feature grid.
struct GraphConfig {
  int k = 2;                // frames of memory
  int w = 0, h = 0;         // feature-grid extents
  int ws = 3, hs = 3;       // spatial window, odd
  int wt = 3, ht = 3;       // temporal window, odd
  TemporalMode temporal_mode = TemporalMode::Bidirectional;

  void validate() const;  // throws ConfigError
};

// CSR edge structure; no self-edges, columns strictly increasing per row.
// The augmented structure (diagonal inserted in sorted position) carries the
// values of the normalized matrix D^-1/2 (A+I) D^-1/2.
struct StGraph {
  int frames = 0, w = 0, h = 0;
  int n = 0;
  std::vector<int> row_ptr;  // n+1
  std::vector<int> col;

  std::vector<int> aug_ptr;  // n+1
  std::vector<int> aug_col;  // nnz + n
  std::vector<int> aug_raw;  // raw edge index, -1 for the diagonal entry

  int node_index(int f, int r, int c) const { return (f * h + r) * w + c; }
  void node_pos(int i, int& f, int& r, int& c) const {
    c = i % w;
    r = (i / w) % h;
    f = i / (w * h);
  }
  int64_t edge_count() const { return static_cast<int64_t>(col.size()); }

  static StGraph build(const GraphConfig& cfg);
  // Arbitrary directed edge list (tests, synthetic cluster graphs);
  // self-edges rejected, duplicates collapsed.
  static StGraph from_edges(int n_nodes, std::vector<std::pair<int, int>> edges);

 private:
  void build_augmented();
};

// Graphs are shared with the backward closures recorded on the tape, which
// outlive the builder's stack frame.
using StGraphPtr = std::shared_ptr<const StGraph>;

inline StGraphPtr make_graph(const GraphConfig& cfg) {
  return std::make_shared<StGraph>(StGraph::build(cfg));
}
inline StGraphPtr make_graph(StGraph g) { return std::make_shared<StGraph>(std::move(g)); }

// Per-node labels rasterized from feature-resolution masks; the labeled set
// covers exactly the memory frames (the query frame is unlabeled).
struct NodeLabels {
  std::vector<int> cls;          // {0,1} per node
  std::vector<uint8_t> labeled;  // 1 for memory-frame nodes
};

// A(i,j) = sigmoid((W1 x_i)^T (W2 x_j)) for every stored edge, in storage
// order. Differentiable w.r.t. x, w1, w2.
Var edge_weights(const StGraphPtr& g, Var x, Var w1, Var w2);

// Parameter-free variant: A(i,j) = sigmoid(x_i^T x_j).
Var edge_weights_unweighted(const StGraphPtr& g, Var x);

struct NormalizedAdjacency {
  Var values;   // over the augmented structure, all in (0, 1]
  Var degrees;  // D(i,i) = 1 + row sum, >= 1
};

// Symmetric normalization with self-loops; raw values must be positive.
NormalizedAdjacency normalize(const StGraphPtr& g, Var values);

// X_gcf = D^-1/2 (A+I) D^-1/2 X via sparse row-wise accumulation.
Var gcf(const StGraphPtr& g, const NormalizedAdjacency& norm, Var x);

// softmax(x_gcf * head) per node.
Var gcn_classify(Var x_gcf, Var head);

// Cross-entropy over the labeled nodes only.
Var loss_sem(Var probs, const NodeLabels& labels);

// Extracts the query-frame block of an [n x d] node matrix as an
// [h x w x d] map (inverse of the rasterization order).
Var query_features(Var x_gcf, const StGraph& g);

// Stacks per-frame [h x w x d] maps into the [n x d] node-feature matrix.
Var rasterize_features(std::span<const Var> frame_features);

// Low-level sparse primitives (exposed for targeted tests).
Var edge_dot(const StGraphPtr& g, Var u, Var v);
Var graph_degree(const StGraphPtr& g, Var values);
Var normalize_values(const StGraphPtr& g, Var values, Var degrees);
Var spmm(const StGraphPtr& g, Var norm_values, Var x);

}  // namespace dtm
