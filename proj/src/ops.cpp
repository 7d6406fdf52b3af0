#include "dtm/ops.hpp"

#include <algorithm>
#include <cmath>

#include "dtm/errors.hpp"

namespace dtm {

namespace {

// Largest double below 1; keeps sigmoid strictly inside (0,1) even where the
// true value would round to 1.0.
constexpr double kSigmoidHi = 0x1.fffffffffffffp-1;
constexpr double kSigmoidLo = 4.9406564584124654e-324;  // smallest positive double
constexpr double kLogClamp = 1e-12;

Tape& tape_of(Var a) { return *a.tape(); }

void require_same_tape(Var a, Var b) {
  if (a.tape() != b.tape()) throw UsageError("operands live on different tapes");
}

void require_rank(const Tensor& t, int r, const char* what) {
  if (t.rank() != r)
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(r) + ", got " +
                     t.dims_str());
}

double stable_sigmoid(double x) {
  double y;
  if (x >= 0.0) {
    y = 1.0 / (1.0 + std::exp(-x));
  } else {
    double e = std::exp(x);
    y = e / (1.0 + e);
  }
  return std::min(std::max(y, kSigmoidLo), kSigmoidHi);
}

}  // namespace

Var add(Var a, Var b) {
  require_same_tape(a, b);
  Tape& t = tape_of(a);
  const Tensor& av = a.val();
  const Tensor& bv = b.val();
  if (!av.same_dims(bv)) throw ShapeError("add: " + av.dims_str() + " vs " + bv.dims_str());
  Tensor out = av;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += bv.data[i];
  int ai = a.id(), bi = b.id();
  return t.make(std::move(out), {ai, bi}, [ai, bi](Tape& tp, int self) {
    const Tensor& g = tp.grad_slot(self);
    if (tp.needs_grad(ai)) {
      Tensor& ga = tp.grad_slot(ai);
      for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
    }
    if (tp.needs_grad(bi)) {
      Tensor& gb = tp.grad_slot(bi);
      for (size_t i = 0; i < g.data.size(); ++i) gb.data[i] += g.data[i];
    }
  });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b);
  Tape& t = tape_of(a);
  const Tensor& av = a.val();
  const Tensor& bv = b.val();
  if (!av.same_dims(bv)) throw ShapeError("sub: " + av.dims_str() + " vs " + bv.dims_str());
  Tensor out = av;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= bv.data[i];
  int ai = a.id(), bi = b.id();
  return t.make(std::move(out), {ai, bi}, [ai, bi](Tape& tp, int self) {
    const Tensor& g = tp.grad_slot(self);
    if (tp.needs_grad(ai)) {
      Tensor& ga = tp.grad_slot(ai);
      for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
    }
    if (tp.needs_grad(bi)) {
      Tensor& gb = tp.grad_slot(bi);
      for (size_t i = 0; i < g.data.size(); ++i) gb.data[i] -= g.data[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b);
  Tape& t = tape_of(a);
  const Tensor& av = a.val();
  const Tensor& bv = b.val();
  if (!av.same_dims(bv)) throw ShapeError("mul: " + av.dims_str() + " vs " + bv.dims_str());
  Tensor out = av;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= bv.data[i];
  int ai = a.id(), bi = b.id();
  return t.make(std::move(out), {ai, bi}, [ai, bi](Tape& tp, int self) {
    const Tensor& g = tp.grad_slot(self);
    const Tensor& av2 = tp.value(ai);
    const Tensor& bv2 = tp.value(bi);
    if (tp.needs_grad(ai)) {
      Tensor& ga = tp.grad_slot(ai);
      for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i] * bv2.data[i];
    }
    if (tp.needs_grad(bi)) {
      Tensor& gb = tp.grad_slot(bi);
      for (size_t i = 0; i < g.data.size(); ++i) gb.data[i] += g.data[i] * av2.data[i];
    }
  });
}

Var scale(Var a, double s) {
  Tape& t = tape_of(a);
  Tensor out = a.val();
  for (double& x : out.data) x *= s;
  int ai = a.id();
  return t.make(std::move(out), {ai}, [ai, s](Tape& tp, int self) {
    if (!tp.needs_grad(ai)) return;
    const Tensor& g = tp.grad_slot(self);
    Tensor& ga = tp.grad_slot(ai);
    for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i] * s;
  });
}

Var relu(Var a) {
  Tape& t = tape_of(a);
  Tensor out = a.val();
  for (double& x : out.data) x = x > 0.0 ? x : 0.0;
  int ai = a.id();
  return t.make(std::move(out), {ai}, [ai](Tape& tp, int self) {
    if (!tp.needs_grad(ai)) return;
    const Tensor& g = tp.grad_slot(self);
    const Tensor& av = tp.value(ai);
    Tensor& ga = tp.grad_slot(ai);
    for (size_t i = 0; i < g.data.size(); ++i)
      if (av.data[i] > 0.0) ga.data[i] += g.data[i];
  });
}

Var sigmoid(Var a) {
  Tape& t = tape_of(a);
  Tensor out = a.val();
  for (double& x : out.data) x = stable_sigmoid(x);
  int ai = a.id();
  return t.make(std::move(out), {ai}, [ai](Tape& tp, int self) {
    if (!tp.needs_grad(ai)) return;
    const Tensor& g = tp.grad_slot(self);
    const Tensor& y = tp.value(self);
    Tensor& ga = tp.grad_slot(ai);
    for (size_t i = 0; i < g.data.size(); ++i)
      ga.data[i] += g.data[i] * y.data[i] * (1.0 - y.data[i]);
  });
}

Var softmax(Var logits) {
  Tape& t = tape_of(logits);
  const Tensor& lv = logits.val();
  require_rank(lv, 2, "softmax");
  const int n = lv.dim(0), c = lv.dim(1);
  if (c < 2) throw ShapeError("softmax: needs >= 2 classes, got " + lv.dims_str());
  Tensor out = Tensor::zeros(lv.dims);
  for (int i = 0; i < n; ++i) {
    double m = lv(i, 0);
    for (int j = 1; j < c; ++j) m = std::max(m, lv(i, j));
    double s = 0.0;
    for (int j = 0; j < c; ++j) {
      double e = std::exp(lv(i, j) - m);
      out(i, j) = e;
      s += e;
    }
    for (int j = 0; j < c; ++j) out(i, j) /= s;
  }
  int li = logits.id();
  return t.make(std::move(out), {li}, [li, n, c](Tape& tp, int self) {
    if (!tp.needs_grad(li)) return;
    const Tensor& g = tp.grad_slot(self);
    const Tensor& y = tp.value(self);
    Tensor& gl = tp.grad_slot(li);
    for (int i = 0; i < n; ++i) {
      double dot = 0.0;
      for (int j = 0; j < c; ++j) dot += g(i, j) * y(i, j);
      for (int j = 0; j < c; ++j) gl(i, j) += y(i, j) * (g(i, j) - dot);
    }
  });
}

Var cross_entropy(Var probs, const std::vector<int>& labels,
                  const std::vector<uint8_t>& selector) {
  Tape& t = tape_of(probs);
  const Tensor& pv = probs.val();
  require_rank(pv, 2, "cross_entropy");
  const int n = pv.dim(0), c = pv.dim(1);
  if (static_cast<int>(labels.size()) != n || static_cast<int>(selector.size()) != n)
    throw ShapeError("cross_entropy: labels/selector length must equal row count");
  for (int i = 0; i < n; ++i)
    if (labels[i] < 0 || labels[i] >= c)
      throw InputError("cross_entropy: label " + std::to_string(labels[i]) +
                       " out of range [0," + std::to_string(c) + ") at row " +
                       std::to_string(i));
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!selector[static_cast<size_t>(i)]) continue;
    loss -= std::log(std::max(pv(i, labels[static_cast<size_t>(i)]), kLogClamp));
  }
  int pi = probs.id();
  auto lab = labels;
  auto sel = selector;
  return t.make(Tensor::scalar(loss), {pi},
                [pi, lab = std::move(lab), sel = std::move(sel)](Tape& tp, int self) {
                  if (!tp.needs_grad(pi)) return;
                  double g = tp.grad_slot(self)(0);
                  const Tensor& p = tp.value(pi);
                  Tensor& gp = tp.grad_slot(pi);
                  const int rows = p.dim(0);
                  for (int i = 0; i < rows; ++i) {
                    if (!sel[static_cast<size_t>(i)]) continue;
                    double v = p(i, lab[static_cast<size_t>(i)]);
                    if (v > kLogClamp) gp(i, lab[static_cast<size_t>(i)]) -= g / v;
                    // below the clamp the loss is constant in v
                  }
                });
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  Tape& t = tape_of(a);
  const Tensor& av = a.val();
  const Tensor& bv = b.val();
  require_rank(av, 2, "matmul lhs");
  require_rank(bv, 2, "matmul rhs");
  if (av.dim(1) != bv.dim(0))
    throw ShapeError("matmul: inner dims disagree: " + av.dims_str() + " vs " + bv.dims_str());
  const int m = av.dim(0), n = av.dim(1), p = bv.dim(1);
  Tensor out = Tensor::zeros({m, p});
  for (int i = 0; i < m; ++i) {
    const double* arow = &av.data[static_cast<size_t>(i) * n];
    double* orow = &out.data[static_cast<size_t>(i) * p];
    for (int kk = 0; kk < n; ++kk) {
      double aik = arow[kk];
      const double* brow = &bv.data[static_cast<size_t>(kk) * p];
      for (int j = 0; j < p; ++j) orow[j] += aik * brow[j];
    }
  }
  int ai = a.id(), bi = b.id();
  return t.make(std::move(out), {ai, bi}, [ai, bi, m, n, p](Tape& tp, int self) {
    const Tensor& g = tp.grad_slot(self);
    const Tensor& av2 = tp.value(ai);
    const Tensor& bv2 = tp.value(bi);
    if (tp.needs_grad(ai)) {  // ga += g * b^T
      Tensor& ga = tp.grad_slot(ai);
      for (int i = 0; i < m; ++i)
        for (int kk = 0; kk < n; ++kk) {
          double s = 0.0;
          const double* grow = &g.data[static_cast<size_t>(i) * p];
          const double* brow = &bv2.data[static_cast<size_t>(kk) * p];
          for (int j = 0; j < p; ++j) s += grow[j] * brow[j];
          ga.data[static_cast<size_t>(i) * n + kk] += s;
        }
    }
    if (tp.needs_grad(bi)) {  // gb += a^T * g
      Tensor& gb = tp.grad_slot(bi);
      for (int kk = 0; kk < n; ++kk)
        for (int i = 0; i < m; ++i) {
          double aik = av2.data[static_cast<size_t>(i) * n + kk];
          const double* grow = &g.data[static_cast<size_t>(i) * p];
          double* gbrow = &gb.data[static_cast<size_t>(kk) * p];
          for (int j = 0; j < p; ++j) gbrow[j] += aik * grow[j];
        }
    }
  });
}

Var transpose(Var a) {
  Tape& t = tape_of(a);
  const Tensor& av = a.val();
  require_rank(av, 2, "transpose");
  const int m = av.dim(0), n = av.dim(1);
  Tensor out = Tensor::zeros({n, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out(j, i) = av(i, j);
  int ai = a.id();
  return t.make(std::move(out), {ai}, [ai, m, n](Tape& tp, int self) {
    if (!tp.needs_grad(ai)) return;
    const Tensor& g = tp.grad_slot(self);
    Tensor& ga = tp.grad_slot(ai);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) ga(i, j) += g(j, i);
  });
}

Var matvec(Var m, Var v) {
  require_same_tape(m, v);
  Tape& t = tape_of(m);
  const Tensor& mv = m.val();
  const Tensor& vv = v.val();
  require_rank(mv, 2, "matvec matrix");
  require_rank(vv, 1, "matvec vector");
  if (mv.dim(1) != vv.dim(0))
    throw ShapeError("matvec: dims disagree: " + mv.dims_str() + " vs " + vv.dims_str());
  const int o = mv.dim(0), i = mv.dim(1);
  Tensor out = Tensor::zeros({o});
  for (int r = 0; r < o; ++r) {
    double s = 0.0;
    for (int c = 0; c < i; ++c) s += mv(r, c) * vv(c);
    out(r) = s;
  }
  int mi = m.id(), vi = v.id();
  return t.make(std::move(out), {mi, vi}, [mi, vi, o, i](Tape& tp, int self) {
    const Tensor& g = tp.grad_slot(self);
    const Tensor& mv2 = tp.value(mi);
    const Tensor& vv2 = tp.value(vi);
    if (tp.needs_grad(mi)) {
      Tensor& gm = tp.grad_slot(mi);
      for (int r = 0; r < o; ++r)
        for (int c = 0; c < i; ++c) gm(r, c) += g(r) * vv2(c);
    }
    if (tp.needs_grad(vi)) {
      Tensor& gv = tp.grad_slot(vi);
      for (int r = 0; r < o; ++r)
        for (int c = 0; c < i; ++c) gv(c) += g(r) * mv2(r, c);
    }
  });
}

Var vec_concat(Var a, Var b) {
  require_same_tape(a, b);
  Tape& t = tape_of(a);
  const Tensor& av = a.val();
  const Tensor& bv = b.val();
  require_rank(av, 1, "vec_concat lhs");
  require_rank(bv, 1, "vec_concat rhs");
  const int n = av.dim(0), m = bv.dim(0);
  Tensor out = Tensor::zeros({n + m});
  for (int i = 0; i < n; ++i) out(i) = av(i);
  for (int i = 0; i < m; ++i) out(n + i) = bv(i);
  int ai = a.id(), bi = b.id();
  return t.make(std::move(out), {ai, bi}, [ai, bi, n, m](Tape& tp, int self) {
    const Tensor& g = tp.grad_slot(self);
    if (tp.needs_grad(ai)) {
      Tensor& ga = tp.grad_slot(ai);
      for (int i = 0; i < n; ++i) ga(i) += g(i);
    }
    if (tp.needs_grad(bi)) {
      Tensor& gb = tp.grad_slot(bi);
      for (int i = 0; i < m; ++i) gb(i) += g(n + i);
    }
  });
}

Var inner(Var a, Var b) {
  require_same_tape(a, b);
  Tape& t = tape_of(a);
  const Tensor& av = a.val();
  const Tensor& bv = b.val();
  if (av.numel() != bv.numel())
    throw ShapeError("inner: element counts disagree: " + av.dims_str() + " vs " + bv.dims_str());
  double s = 0.0;
  for (size_t i = 0; i < av.data.size(); ++i) s += av.data[i] * bv.data[i];
  int ai = a.id(), bi = b.id();
  return t.make(Tensor::scalar(s), {ai, bi}, [ai, bi](Tape& tp, int self) {
    double g = tp.grad_slot(self)(0);
    const Tensor& av2 = tp.value(ai);
    const Tensor& bv2 = tp.value(bi);
    if (tp.needs_grad(ai)) {
      Tensor& ga = tp.grad_slot(ai);
      for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += g * bv2.data[i];
    }
    if (tp.needs_grad(bi)) {
      Tensor& gb = tp.grad_slot(bi);
      for (size_t i = 0; i < gb.data.size(); ++i) gb.data[i] += g * av2.data[i];
    }
  });
}

Var reshape(Var a, std::vector<int> dims) {
  Tape& t = tape_of(a);
  const Tensor& av = a.val();
  if (checked_numel(dims) != av.numel())
    throw ShapeError("reshape: element counts disagree: " + av.dims_str());
  Tensor out;
  out.dims = dims;
  out.data = av.data;
  int ai = a.id();
  return t.make(std::move(out), {ai}, [ai](Tape& tp, int self) {
    if (!tp.needs_grad(ai)) return;
    const Tensor& g = tp.grad_slot(self);
    Tensor& ga = tp.grad_slot(ai);
    for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
  });
}

Var slice_rows(Var a, int from, int to) {
  Tape& t = tape_of(a);
  const Tensor& av = a.val();
  require_rank(av, 2, "slice_rows");
  const int n = av.dim(0), d = av.dim(1);
  if (from < 0 || to > n || from >= to) throw ShapeError("slice_rows: bad range");
  Tensor out = Tensor::zeros({to - from, d});
  for (int i = from; i < to; ++i)
    for (int j = 0; j < d; ++j) out(i - from, j) = av(i, j);
  int ai = a.id();
  return t.make(std::move(out), {ai}, [ai, from, to, d](Tape& tp, int self) {
    if (!tp.needs_grad(ai)) return;
    const Tensor& g = tp.grad_slot(self);
    Tensor& ga = tp.grad_slot(ai);
    for (int i = from; i < to; ++i)
      for (int j = 0; j < d; ++j) ga(i, j) += g(i - from, j);
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no parts");
  Tape& t = tape_of(parts[0]);
  int d = -1, total = 0;
  std::vector<int> ids;
  std::vector<int> rows;
  for (const Var& p : parts) {
    require_same_tape(parts[0], p);
    const Tensor& pv = p.val();
    require_rank(pv, 2, "concat_rows part");
    if (d < 0) d = pv.dim(1);
    if (pv.dim(1) != d)
      throw ShapeError("concat_rows: column mismatch: " + pv.dims_str());
    ids.push_back(p.id());
    rows.push_back(pv.dim(0));
    total += pv.dim(0);
  }
  Tensor out = Tensor::zeros({total, d});
  int at = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.val();
    for (int i = 0; i < pv.dim(0); ++i)
      for (int j = 0; j < d; ++j) out(at + i, j) = pv(i, j);
    at += pv.dim(0);
  }
  return t.make(std::move(out), ids,
                [ids, rows, d](Tape& tp, int self) {
                  const Tensor& g = tp.grad_slot(self);
                  int at2 = 0;
                  for (size_t k = 0; k < ids.size(); ++k) {
                    if (tp.needs_grad(ids[k])) {
                      Tensor& gp = tp.grad_slot(ids[k]);
                      for (int i = 0; i < rows[k]; ++i)
                        for (int j = 0; j < d; ++j) gp(i, j) += g(at2 + i, j);
                    }
                    at2 += rows[k];
                  }
                });
}

Var concat_channels(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no parts");
  Tape& t = tape_of(parts[0]);
  const Tensor& first = parts[0].val();
  require_rank(first, 3, "concat_channels part");
  const int h = first.dim(0), w = first.dim(1);
  int ctotal = 0;
  std::vector<int> ids;
  std::vector<int> chans;
  for (const Var& p : parts) {
    require_same_tape(parts[0], p);
    const Tensor& pv = p.val();
    require_rank(pv, 3, "concat_channels part");
    if (pv.dim(0) != h || pv.dim(1) != w)
      throw ShapeError("concat_channels: spatial mismatch: " + first.dims_str() + " vs " +
                       pv.dims_str());
    ids.push_back(p.id());
    chans.push_back(pv.dim(2));
    ctotal += pv.dim(2);
  }
  Tensor out = Tensor::zeros({h, w, ctotal});
  int base = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.val();
    const int c = pv.dim(2);
    for (int r = 0; r < h; ++r)
      for (int cc = 0; cc < w; ++cc)
        for (int q = 0; q < c; ++q) out(r, cc, base + q) = pv(r, cc, q);
    base += c;
  }
  return t.make(std::move(out), ids,
                [ids, chans, h, w](Tape& tp, int self) {
                  const Tensor& g = tp.grad_slot(self);
                  int base2 = 0;
                  for (size_t k = 0; k < ids.size(); ++k) {
                    const int c = chans[k];
                    if (tp.needs_grad(ids[k])) {
                      Tensor& gp = tp.grad_slot(ids[k]);
                      for (int r = 0; r < h; ++r)
                        for (int cc = 0; cc < w; ++cc)
                          for (int q = 0; q < c; ++q) gp(r, cc, q) += g(r, cc, base2 + q);
                    }
                    base2 += c;
                  }
                });
}

Var conv2d(Var input, Var kernel, int stride, Pad pad) {
  require_same_tape(input, kernel);
  Tape& t = tape_of(input);
  const Tensor& in = input.val();
  const Tensor& k = kernel.val();
  require_rank(in, 3, "conv2d input");
  require_rank(k, 4, "conv2d kernel");
  if (stride < 1) throw InputError("conv2d: stride must be positive");
  const int h = in.dim(0), w = in.dim(1), cin = in.dim(2);
  const int kh = k.dim(0), kw = k.dim(1), kcin = k.dim(2), cout = k.dim(3);
  if (cin != kcin)
    throw ShapeError("conv2d: channel mismatch: input " + in.dims_str() + " vs kernel " +
                     k.dims_str());
  int ph = 0, pw = 0;
  if (pad == Pad::Same) {
    if (kh % 2 == 0 || kw % 2 == 0)
      throw InputError("conv2d: same padding requires odd kernel extents");
    ph = (kh - 1) / 2;
    pw = (kw - 1) / 2;
  }
  const int oh = (h + 2 * ph - kh) / stride + 1;
  const int ow = (w + 2 * pw - kw) / stride + 1;
  if (oh <= 0 || ow <= 0)
    throw ShapeError("conv2d: kernel " + k.dims_str() + " larger than input " + in.dims_str());
  Tensor out = Tensor::zeros({oh, ow, cout});
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      double* orow = &out.data[(static_cast<size_t>(oy) * ow + ox) * cout];
      for (int ky = 0; ky < kh; ++ky) {
        const int iy = oy * stride + ky - ph;
        if (iy < 0 || iy >= h) continue;
        for (int kx = 0; kx < kw; ++kx) {
          const int ix = ox * stride + kx - pw;
          if (ix < 0 || ix >= w) continue;
          const double* irow = &in.data[(static_cast<size_t>(iy) * w + ix) * cin];
          const double* krow = &k.data[(static_cast<size_t>(ky) * kw + kx) * cin * cout];
          for (int ci = 0; ci < cin; ++ci) {
            const double v = irow[ci];
            const double* kc = krow + static_cast<size_t>(ci) * cout;
            for (int co = 0; co < cout; ++co) orow[co] += v * kc[co];
          }
        }
      }
    }
  }
  int ii = input.id(), ki = kernel.id();
  return t.make(
      std::move(out), {ii, ki},
      [ii, ki, h, w, cin, kh, kw, cout, oh, ow, ph, pw, stride](Tape& tp, int self) {
        const Tensor& g = tp.grad_slot(self);
        const Tensor& in2 = tp.value(ii);
        const Tensor& k2 = tp.value(ki);
        const bool gi = tp.needs_grad(ii);
        const bool gk = tp.needs_grad(ki);
        Tensor* ginp = gi ? &tp.grad_slot(ii) : nullptr;
        Tensor* gker = gk ? &tp.grad_slot(ki) : nullptr;
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            const double* grow = &g.data[(static_cast<size_t>(oy) * ow + ox) * cout];
            for (int ky = 0; ky < kh; ++ky) {
              const int iy = oy * stride + ky - ph;
              if (iy < 0 || iy >= h) continue;
              for (int kx = 0; kx < kw; ++kx) {
                const int ix = ox * stride + kx - pw;
                if (ix < 0 || ix >= w) continue;
                const size_t ioff = (static_cast<size_t>(iy) * w + ix) * cin;
                const size_t koff = (static_cast<size_t>(ky) * kw + kx) * cin * cout;
                if (gi) {
                  double* girow = &ginp->data[ioff];
                  for (int ci = 0; ci < cin; ++ci) {
                    const double* kc = &k2.data[koff + static_cast<size_t>(ci) * cout];
                    double s = 0.0;
                    for (int co = 0; co < cout; ++co) s += kc[co] * grow[co];
                    girow[ci] += s;
                  }
                }
                if (gk) {
                  const double* irow = &in2.data[ioff];
                  for (int ci = 0; ci < cin; ++ci) {
                    const double v = irow[ci];
                    double* gkc = &gker->data[koff + static_cast<size_t>(ci) * cout];
                    for (int co = 0; co < cout; ++co) gkc[co] += v * grow[co];
                  }
                }
              }
            }
          }
        }
      });
}

Var upsample2x(Var input) {
  Tape& t = tape_of(input);
  const Tensor& in = input.val();
  require_rank(in, 3, "upsample2x");
  const int h = in.dim(0), w = in.dim(1), c = in.dim(2);
  Tensor out = Tensor::zeros({2 * h, 2 * w, c});
  for (int r = 0; r < h; ++r)
    for (int cc = 0; cc < w; ++cc)
      for (int q = 0; q < c; ++q) {
        const double v = in(r, cc, q);
        out(2 * r, 2 * cc, q) = v;
        out(2 * r, 2 * cc + 1, q) = v;
        out(2 * r + 1, 2 * cc, q) = v;
        out(2 * r + 1, 2 * cc + 1, q) = v;
      }
  int ii = input.id();
  return t.make(std::move(out), {ii}, [ii, h, w, c](Tape& tp, int self) {
    if (!tp.needs_grad(ii)) return;
    const Tensor& g = tp.grad_slot(self);
    Tensor& gin = tp.grad_slot(ii);
    for (int r = 0; r < h; ++r)
      for (int cc = 0; cc < w; ++cc)
        for (int q = 0; q < c; ++q)
          gin(r, cc, q) += g(2 * r, 2 * cc, q) + g(2 * r, 2 * cc + 1, q) +
                           g(2 * r + 1, 2 * cc, q) + g(2 * r + 1, 2 * cc + 1, q);
  });
}

Var masked_gap(Var x, const Tensor& mask, bool area_normalized) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.val();
  require_rank(xv, 3, "masked_gap input");
  if (mask.rank() != 2 || mask.dim(0) != xv.dim(0) || mask.dim(1) != xv.dim(1))
    throw ShapeError("masked_gap: mask " + mask.dims_str() + " vs features " + xv.dims_str());
  const int h = xv.dim(0), w = xv.dim(1), d = xv.dim(2);
  double area = static_cast<double>(h) * static_cast<double>(w);
  if (area_normalized) {
    double m = 0.0;
    for (double v : mask.data) m += v;
    area = std::max(m, 1.0);
  }
  Tensor out = Tensor::zeros({d});
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const double m = mask(r, c);
      if (m == 0.0) continue;
      for (int q = 0; q < d; ++q) out(q) += xv(r, c, q) * m;
    }
  for (int q = 0; q < d; ++q) out(q) /= area;
  int xi = x.id();
  Tensor mcopy = mask;
  return t.make(std::move(out), {xi},
                [xi, h, w, d, area, mcopy = std::move(mcopy)](Tape& tp, int self) {
                  if (!tp.needs_grad(xi)) return;
                  const Tensor& g = tp.grad_slot(self);
                  Tensor& gx = tp.grad_slot(xi);
                  for (int r = 0; r < h; ++r)
                    for (int c = 0; c < w; ++c) {
                      const double m = mcopy(r, c);
                      if (m == 0.0) continue;
                      for (int q = 0; q < d; ++q) gx(r, c, q) += g(q) * m / area;
                    }
                });
}

Var channel_dot(Var x, Var v) {
  require_same_tape(x, v);
  Tape& t = tape_of(x);
  const Tensor& xv = x.val();
  const Tensor& vv = v.val();
  require_rank(xv, 3, "channel_dot map");
  require_rank(vv, 1, "channel_dot vector");
  if (xv.dim(2) != vv.dim(0))
    throw ShapeError("channel_dot: channels disagree: " + xv.dims_str() + " vs " + vv.dims_str());
  const int h = xv.dim(0), w = xv.dim(1), d = xv.dim(2);
  Tensor out = Tensor::zeros({h, w, 1});
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double s = 0.0;
      for (int q = 0; q < d; ++q) s += xv(r, c, q) * vv(q);
      out(r, c, 0) = s;
    }
  int xi = x.id(), vi = v.id();
  return t.make(std::move(out), {xi, vi}, [xi, vi, h, w, d](Tape& tp, int self) {
    const Tensor& g = tp.grad_slot(self);
    const Tensor& xv2 = tp.value(xi);
    const Tensor& vv2 = tp.value(vi);
    if (tp.needs_grad(xi)) {
      Tensor& gx = tp.grad_slot(xi);
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
          const double gg = g(r, c, 0);
          for (int q = 0; q < d; ++q) gx(r, c, q) += gg * vv2(q);
        }
    }
    if (tp.needs_grad(vi)) {
      Tensor& gv = tp.grad_slot(vi);
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
          const double gg = g(r, c, 0);
          for (int q = 0; q < d; ++q) gv(q) += gg * xv2(r, c, q);
        }
    }
  });
}

Tensor slice_channels(const Tensor& t, int from, int to) {
  if (t.rank() != 3) throw ShapeError("slice_channels: expected rank 3, got " + t.dims_str());
  const int h = t.dim(0), w = t.dim(1), c = t.dim(2);
  if (from < 0 || to > c || from >= to) throw ShapeError("slice_channels: bad range");
  Tensor out = Tensor::zeros({h, w, to - from});
  for (int r = 0; r < h; ++r)
    for (int cc = 0; cc < w; ++cc)
      for (int q = from; q < to; ++q) out(r, cc, q - from) = t(r, cc, q);
  return out;
}

}  // namespace dtm
