#include "dtm/stgraph.hpp"

#include <algorithm>
#include <cmath>

#include "dtm/errors.hpp"

namespace dtm {

void GraphConfig::validate() const {
  if (k < 0) throw ConfigError("graph: k must be >= 0");
  if (w < 1 || h < 1) throw ConfigError("graph: grid extents must be positive");
  auto odd = [](int v) { return v >= 1 && v % 2 == 1; };
  if (!odd(ws) || !odd(hs) || !odd(wt) || !odd(ht))
    throw ConfigError("graph: window extents must be odd and >= 1");
}

StGraph StGraph::build(const GraphConfig& cfg) {
  cfg.validate();
  StGraph g;
  g.frames = cfg.k + 1;
  g.w = cfg.w;
  g.h = cfg.h;
  g.n = g.frames * g.w * g.h;
  g.row_ptr.assign(static_cast<size_t>(g.n) + 1, 0);

  const int srr = (cfg.hs - 1) / 2, src = (cfg.ws - 1) / 2;
  const int trr = (cfg.ht - 1) / 2, trc = (cfg.wt - 1) / 2;
  const bool bidir = cfg.temporal_mode == TemporalMode::Bidirectional;

  // Neighbor frames are visited in ascending frame order so that column
  // indices come out strictly increasing (node ids are frame-major).
  auto emit_window = [&](int i, int f, int rc, int cc, int rr, int rcw) {
    for (int r = std::max(0, rc - rr); r <= std::min(g.h - 1, rc + rr); ++r)
      for (int c = std::max(0, cc - rcw); c <= std::min(g.w - 1, cc + rcw); ++c) {
        const int j = g.node_index(f, r, c);
        if (j != i) g.col.push_back(j);
      }
  };

  for (int f = 0; f < g.frames; ++f)
    for (int r = 0; r < g.h; ++r)
      for (int c = 0; c < g.w; ++c) {
        const int i = g.node_index(f, r, c);
        if (bidir && f > 0) emit_window(i, f - 1, r, c, trr, trc);
        emit_window(i, f, r, c, srr, src);
        if (f + 1 < g.frames) emit_window(i, f + 1, r, c, trr, trc);
        g.row_ptr[static_cast<size_t>(i) + 1] = static_cast<int>(g.col.size());
      }
  g.build_augmented();
  return g;
}

StGraph StGraph::from_edges(int n_nodes, std::vector<std::pair<int, int>> edges) {
  if (n_nodes < 1) throw InputError("from_edges: need at least one node");
  for (auto& [i, j] : edges) {
    if (i < 0 || i >= n_nodes || j < 0 || j >= n_nodes)
      throw InputError("from_edges: node id out of range");
    if (i == j) throw InputError("from_edges: self-edges are not stored");
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  StGraph g;
  g.frames = n_nodes;
  g.w = 1;
  g.h = 1;
  g.n = n_nodes;
  g.row_ptr.assign(static_cast<size_t>(n_nodes) + 1, 0);
  for (const auto& [i, j] : edges) {
    g.col.push_back(j);
    g.row_ptr[static_cast<size_t>(i) + 1]++;
  }
  for (int i = 0; i < n_nodes; ++i) g.row_ptr[static_cast<size_t>(i) + 1] += g.row_ptr[i];
  g.build_augmented();
  return g;
}

void StGraph::build_augmented() {
  aug_ptr.assign(static_cast<size_t>(n) + 1, 0);
  aug_col.clear();
  aug_raw.clear();
  aug_col.reserve(col.size() + static_cast<size_t>(n));
  aug_raw.reserve(col.size() + static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    bool placed = false;
    for (int e = row_ptr[i]; e < row_ptr[static_cast<size_t>(i) + 1]; ++e) {
      if (!placed && col[static_cast<size_t>(e)] > i) {
        aug_col.push_back(i);
        aug_raw.push_back(-1);
        placed = true;
      }
      aug_col.push_back(col[static_cast<size_t>(e)]);
      aug_raw.push_back(e);
    }
    if (!placed) {
      aug_col.push_back(i);
      aug_raw.push_back(-1);
    }
    aug_ptr[static_cast<size_t>(i) + 1] = static_cast<int>(aug_col.size());
  }
}

namespace {
// Raw adjacency values for a zero-edge graph are carried in a single
// placeholder slot that is never read.
int value_slots(const StGraph& g) { return std::max(static_cast<int>(g.col.size()), 1); }
}  // namespace

Var edge_dot(const StGraphPtr& g, Var u, Var v) {
  Tape& t = *u.tape();
  const Tensor& uv = u.val();
  const Tensor& vv = v.val();
  if (uv.rank() != 2 || vv.rank() != 2 || uv.dim(0) != g->n || vv.dim(0) != g->n ||
      uv.dim(1) != vv.dim(1))
    throw ShapeError("edge_dot: " + uv.dims_str() + " vs " + vv.dims_str() + " on n=" +
                     std::to_string(g->n));
  const int r = uv.dim(1);
  Tensor out = Tensor::zeros({value_slots(*g)});
  for (int i = 0; i < g->n; ++i)
    for (int e = g->row_ptr[i]; e < g->row_ptr[static_cast<size_t>(i) + 1]; ++e) {
      const int j = g->col[static_cast<size_t>(e)];
      double s = 0.0;
      for (int q = 0; q < r; ++q) s += uv(i, q) * vv(j, q);
      out(e) = s;
    }
  int ui = u.id(), vi = v.id();
  return t.make(std::move(out), {ui, vi}, [ui, vi, g, r](Tape& tp, int self) {
    const Tensor& gr = tp.grad_slot(self);
    const Tensor& uv2 = tp.value(ui);
    const Tensor& vv2 = tp.value(vi);
    const bool nu = tp.needs_grad(ui), nv = tp.needs_grad(vi);
    Tensor* gu = nu ? &tp.grad_slot(ui) : nullptr;
    Tensor* gv = nv ? &tp.grad_slot(vi) : nullptr;
    for (int i = 0; i < g->n; ++i)
      for (int e = g->row_ptr[i]; e < g->row_ptr[static_cast<size_t>(i) + 1]; ++e) {
        const int j = g->col[static_cast<size_t>(e)];
        const double ge = gr(e);
        if (nu)
          for (int q = 0; q < r; ++q) (*gu)(i, q) += ge * vv2(j, q);
        if (nv)
          for (int q = 0; q < r; ++q) (*gv)(j, q) += ge * uv2(i, q);
      }
  });
}

Var edge_weights(const StGraphPtr& g, Var x, Var w1, Var w2) {
  const Tensor& xv = x.val();
  const Tensor& w1v = w1.val();
  const Tensor& w2v = w2.val();
  if (xv.rank() != 2 || xv.dim(0) != g->n)
    throw ShapeError("edge_weights: features " + xv.dims_str() + " for n=" + std::to_string(g->n));
  if (w1v.rank() != 2 || w2v.rank() != 2 || w1v.dim(1) != xv.dim(1) ||
      w2v.dim(1) != xv.dim(1) || w1v.dim(0) != w2v.dim(0))
    throw ShapeError("edge_weights: projections " + w1v.dims_str() + ", " + w2v.dims_str() +
                     " vs features " + xv.dims_str());
  Var u = matmul(x, transpose(w1));
  Var v = matmul(x, transpose(w2));
  return sigmoid(edge_dot(g, u, v));
}

Var edge_weights_unweighted(const StGraphPtr& g, Var x) {
  return sigmoid(edge_dot(g, x, x));
}

Var graph_degree(const StGraphPtr& g, Var values) {
  Tape& t = *values.tape();
  const Tensor& vv = values.val();
  if (vv.numel() != value_slots(*g))
    throw ShapeError("graph_degree: value count " + vv.dims_str() + " vs nnz " +
                     std::to_string(g->col.size()));
  Tensor out = Tensor::full({g->n}, 1.0);  // self-loop contributes 1
  for (int i = 0; i < g->n; ++i)
    for (int e = g->row_ptr[i]; e < g->row_ptr[static_cast<size_t>(i) + 1]; ++e)
      out(i) += vv(e);
  int vi = values.id();
  return t.make(std::move(out), {vi}, [vi, g](Tape& tp, int self) {
    if (!tp.needs_grad(vi)) return;
    const Tensor& gr = tp.grad_slot(self);
    Tensor& gvals = tp.grad_slot(vi);
    for (int i = 0; i < g->n; ++i)
      for (int e = g->row_ptr[i]; e < g->row_ptr[static_cast<size_t>(i) + 1]; ++e)
        gvals(e) += gr(i);
  });
}

Var normalize_values(const StGraphPtr& g, Var values, Var degrees) {
  Tape& t = *values.tape();
  const Tensor& vv = values.val();
  const Tensor& dv = degrees.val();
  if (dv.numel() != g->n) throw ShapeError("normalize_values: bad degree vector");
  if (vv.numel() != value_slots(*g))
    throw ShapeError("normalize_values: value count does not match the graph");
  const int aug_nnz = static_cast<int>(g->aug_col.size());
  Tensor out = Tensor::zeros({aug_nnz});
  for (int i = 0; i < g->n; ++i)
    for (int e = g->aug_ptr[i]; e < g->aug_ptr[static_cast<size_t>(i) + 1]; ++e) {
      const int raw = g->aug_raw[static_cast<size_t>(e)];
      if (raw < 0) {
        out(e) = 1.0 / dv(i);
      } else {
        const int j = g->aug_col[static_cast<size_t>(e)];
        out(e) = vv(raw) / std::sqrt(dv(i) * dv(j));
      }
    }
  int vi = values.id(), di = degrees.id();
  return t.make(std::move(out), {vi, di}, [vi, di, g](Tape& tp, int self) {
    const Tensor& gr = tp.grad_slot(self);
    const Tensor& vv2 = tp.value(vi);
    const Tensor& dv2 = tp.value(di);
    const bool nv = tp.needs_grad(vi), nd = tp.needs_grad(di);
    Tensor* gvals = nv ? &tp.grad_slot(vi) : nullptr;
    Tensor* gdeg = nd ? &tp.grad_slot(di) : nullptr;
    for (int i = 0; i < g->n; ++i)
      for (int e = g->aug_ptr[i]; e < g->aug_ptr[static_cast<size_t>(i) + 1]; ++e) {
        const int raw = g->aug_raw[static_cast<size_t>(e)];
        const double ge = gr(e);
        if (raw < 0) {
          if (nd) (*gdeg)(i) -= ge / (dv2(i) * dv2(i));
        } else {
          const int j = g->aug_col[static_cast<size_t>(e)];
          const double inv = 1.0 / std::sqrt(dv2(i) * dv2(j));
          if (nv) (*gvals)(raw) += ge * inv;
          if (nd) {
            const double scaled = ge * vv2(raw) * inv * 0.5;
            (*gdeg)(i) -= scaled / dv2(i);
            (*gdeg)(j) -= scaled / dv2(j);
          }
        }
      }
  });
}

NormalizedAdjacency normalize(const StGraphPtr& g, Var values) {
  const Tensor& vv = values.val();
  const int nnz = static_cast<int>(g->col.size());
  for (int e = 0; e < nnz; ++e)
    if (!(vv(e) > 0.0))
      throw InputError("normalize: adjacency values must be positive, got " +
                       std::to_string(vv(e)) + " at edge " + std::to_string(e));
  Var deg = graph_degree(g, values);
  Var nvals = normalize_values(g, values, deg);
  return NormalizedAdjacency{nvals, deg};
}

Var spmm(const StGraphPtr& g, Var norm_values, Var x) {
  Tape& t = *norm_values.tape();
  const Tensor& nv = norm_values.val();
  const Tensor& xv = x.val();
  if (xv.rank() != 2 || xv.dim(0) != g->n)
    throw ShapeError("spmm: features " + xv.dims_str() + " for n=" + std::to_string(g->n));
  if (nv.numel() != static_cast<int64_t>(g->aug_col.size()))
    throw ShapeError("spmm: value count does not match the augmented structure");
  const int d = xv.dim(1);
  Tensor out = Tensor::zeros({g->n, d});
  for (int i = 0; i < g->n; ++i) {
    double* orow = &out.data[static_cast<size_t>(i) * d];
    for (int e = g->aug_ptr[i]; e < g->aug_ptr[static_cast<size_t>(i) + 1]; ++e) {
      const int j = g->aug_col[static_cast<size_t>(e)];
      const double v = nv(e);
      const double* xrow = &xv.data[static_cast<size_t>(j) * d];
      for (int q = 0; q < d; ++q) orow[q] += v * xrow[q];
    }
  }
  int ni = norm_values.id(), xi = x.id();
  return t.make(std::move(out), {ni, xi}, [ni, xi, g, d](Tape& tp, int self) {
    const Tensor& gr = tp.grad_slot(self);
    const Tensor& nv2 = tp.value(ni);
    const Tensor& xv2 = tp.value(xi);
    const bool nn = tp.needs_grad(ni), nx = tp.needs_grad(xi);
    Tensor* gn = nn ? &tp.grad_slot(ni) : nullptr;
    Tensor* gx = nx ? &tp.grad_slot(xi) : nullptr;
    for (int i = 0; i < g->n; ++i) {
      const double* grow = &gr.data[static_cast<size_t>(i) * d];
      for (int e = g->aug_ptr[i]; e < g->aug_ptr[static_cast<size_t>(i) + 1]; ++e) {
        const int j = g->aug_col[static_cast<size_t>(e)];
        if (nn) {
          const double* xrow = &xv2.data[static_cast<size_t>(j) * d];
          double s = 0.0;
          for (int q = 0; q < d; ++q) s += grow[q] * xrow[q];
          (*gn)(e) += s;
        }
        if (nx) {
          const double v = nv2(e);
          double* gxrow = &gx->data[static_cast<size_t>(j) * d];
          for (int q = 0; q < d; ++q) gxrow[q] += v * grow[q];
        }
      }
    }
  });
}

Var gcf(const StGraphPtr& g, const NormalizedAdjacency& norm, Var x) {
  return spmm(g, norm.values, x);
}

Var gcn_classify(Var x_gcf, Var head) { return softmax(matmul(x_gcf, head)); }

Var loss_sem(Var probs, const NodeLabels& labels) {
  return cross_entropy(probs, labels.cls, labels.labeled);
}

Var query_features(Var x_gcf, const StGraph& g) {
  const Tensor& xv = x_gcf.val();
  if (xv.rank() != 2 || xv.dim(0) != g.n)
    throw ShapeError("query_features: " + xv.dims_str() + " for n=" + std::to_string(g.n));
  const int per_frame = g.w * g.h;
  Var block = slice_rows(x_gcf, g.n - per_frame, g.n);
  return reshape(block, {g.h, g.w, xv.dim(1)});
}

Var rasterize_features(std::span<const Var> frame_features) {
  if (frame_features.empty()) throw ShapeError("rasterize_features: no frames");
  std::vector<Var> flat;
  flat.reserve(frame_features.size());
  for (const Var& f : frame_features) {
    const Tensor& fv = f.val();
    if (fv.rank() != 3) throw ShapeError("rasterize_features: expected maps, got " + fv.dims_str());
    flat.push_back(reshape(f, {fv.dim(0) * fv.dim(1), fv.dim(2)}));
  }
  return concat_rows(flat);
}

}  // namespace dtm
