// src/ops.cc

// Copyright 2026  The atts2s Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "atts2s/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "kernels.h"

namespace atts2s {

namespace {

std::string Shapes(const std::vector<int> &a, const std::vector<int> &b) {
  return Tensor<float>::ShapeString(a) + " vs " + Tensor<float>::ShapeString(b);
}

template <typename T>
void RequireSameShape(const Tensor<T> &a, const Tensor<T> &b, const char *op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         Shapes(a.shape(), b.shape()));
}

template <typename T>
void AddInto(Tensor<T> *dst, const T *src) {
  if (!dst) return;
  T *d = dst->data();
  for (std::size_t k = 0; k < dst->size(); ++k) d[k] += src[k];
}

std::size_t CountValid(const Mask &mask) {
  return std::size_t(std::count_if(mask.begin(), mask.end(),
                                   [](std::uint8_t m) { return m != 0; }));
}

}  // namespace

template <typename T>
Var Linear(Graph<T> &g, Var x, Var w, Var b) {
  const Tensor<T> &xv = g.value(x);
  const Tensor<T> &wv = g.value(w);
  const int n = xv.rows(), din = xv.cols();
  if (wv.rank() != 2 || wv.dim(0) != din)
    throw DimensionError("linear: input " + xv.ShapeString() + " vs weight " +
                         wv.ShapeString());
  const int dout = wv.dim(1);
  Tensor<T> out = Tensor<T>::Matrix(n, dout);
  if (b.valid()) {
    const Tensor<T> &bv = g.value(b);
    if (bv.size() != std::size_t(dout))
      throw DimensionError("linear: weight " + wv.ShapeString() + " vs bias " +
                           bv.ShapeString());
    for (int i = 0; i < n; ++i) std::copy(bv.data(), bv.data() + dout, out.row(i));
  }
  kernels::MatMulAcc(xv.data(), n, din, wv.data(), dout, out.data());
  return g.Record(std::move(out), {x, w, b}, [x, w, b, n, din, dout](Graph<T> &g, const Tensor<T> &dy) {
    if (Tensor<T> *dx = g.GradTarget(x)) {
      std::vector<T> wt(std::size_t(din) * dout);
      kernels::Transpose(g.value(w).data(), din, dout, wt.data());
      kernels::MatMulAcc(dy.data(), n, dout, wt.data(), din, dx->data());
    }
    if (Tensor<T> *dw = g.GradTarget(w))
      kernels::MatMulTransAAcc(g.value(x).data(), n, din, dy.data(), dout, dw->data());
    if (Tensor<T> *db = b.valid() ? g.GradTarget(b) : nullptr)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < dout; ++j) (*db)[j] += dy(i, j);
  });
}

template <typename T>
Var Add(Graph<T> &g, Var a, Var b) {
  RequireSameShape(g.value(a), g.value(b), "add");
  Tensor<T> out = g.value(a);
  const Tensor<T> &bv = g.value(b);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += bv[k];
  return g.Record(std::move(out), {a, b}, [a, b](Graph<T> &g, const Tensor<T> &dy) {
    AddInto(g.GradTarget(a), dy.data());
    AddInto(g.GradTarget(b), dy.data());
  });
}

template <typename T>
Var Sub(Graph<T> &g, Var a, Var b) {
  RequireSameShape(g.value(a), g.value(b), "sub");
  Tensor<T> out = g.value(a);
  const Tensor<T> &bv = g.value(b);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] -= bv[k];
  return g.Record(std::move(out), {a, b}, [a, b](Graph<T> &g, const Tensor<T> &dy) {
    AddInto(g.GradTarget(a), dy.data());
    if (Tensor<T> *db = g.GradTarget(b))
      for (std::size_t k = 0; k < db->size(); ++k) (*db)[k] -= dy[k];
  });
}

template <typename T>
Var Mul(Graph<T> &g, Var a, Var b) {
  RequireSameShape(g.value(a), g.value(b), "mul");
  Tensor<T> out = g.value(a);
  const Tensor<T> &bv = g.value(b);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= bv[k];
  return g.Record(std::move(out), {a, b}, [a, b](Graph<T> &g, const Tensor<T> &dy) {
    if (Tensor<T> *da = g.GradTarget(a)) {
      const Tensor<T> &bv = g.value(b);
      for (std::size_t k = 0; k < da->size(); ++k) (*da)[k] += dy[k] * bv[k];
    }
    if (Tensor<T> *db = g.GradTarget(b)) {
      const Tensor<T> &av = g.value(a);
      for (std::size_t k = 0; k < db->size(); ++k) (*db)[k] += dy[k] * av[k];
    }
  });
}

template <typename T>
Var Scale(Graph<T> &g, Var a, double factor) {
  Tensor<T> out = g.value(a);
  const T f = T(factor);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= f;
  return g.Record(std::move(out), {a}, [a, f](Graph<T> &g, const Tensor<T> &dy) {
    if (Tensor<T> *da = g.GradTarget(a))
      for (std::size_t k = 0; k < da->size(); ++k) (*da)[k] += f * dy[k];
  });
}

template <typename T>
Var Sum(Graph<T> &g, Var a) {
  T s = 0;
  for (T v : g.value(a).values()) s += v;
  return g.Record(Tensor<T>::Scalar(s), {a}, [a](Graph<T> &g, const Tensor<T> &dy) {
    if (Tensor<T> *da = g.GradTarget(a))
      for (std::size_t k = 0; k < da->size(); ++k) (*da)[k] += dy[0];
  });
}

template <typename T>
Var Sigmoid(Graph<T> &g, Var a) {
  Tensor<T> out = g.value(a);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = kernels::Sigmoid(out[k]);
  auto y = std::make_shared<Var>();
  *y = g.Record(std::move(out), {a}, [a, y](Graph<T> &g, const Tensor<T> &dy) {
    if (Tensor<T> *da = g.GradTarget(a)) {
      const Tensor<T> &yv = g.value(*y);
      for (std::size_t k = 0; k < da->size(); ++k) (*da)[k] += dy[k] * yv[k] * (T(1) - yv[k]);
    }
  });
  return *y;
}

template <typename T>
Var Tanh(Graph<T> &g, Var a) {
  Tensor<T> out = g.value(a);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::tanh(out[k]);
  auto y = std::make_shared<Var>();
  *y = g.Record(std::move(out), {a}, [a, y](Graph<T> &g, const Tensor<T> &dy) {
    if (Tensor<T> *da = g.GradTarget(a)) {
      const Tensor<T> &yv = g.value(*y);
      for (std::size_t k = 0; k < da->size(); ++k) (*da)[k] += dy[k] * (T(1) - yv[k] * yv[k]);
    }
  });
  return *y;
}

template <typename T>
Var Glu(Graph<T> &g, Var x) {
  const Tensor<T> &xv = g.value(x);
  if (xv.cols() % 2 != 0)
    throw DimensionError("glu: last dimension " + std::to_string(xv.cols()) + " is odd");
  const int n = xv.rows(), h = xv.cols() / 2;
  Tensor<T> out = Tensor<T>::Matrix(n, h);
  for (int i = 0; i < n; ++i)
    for (int u = 0; u < h; ++u) out(i, u) = xv(i, u) * kernels::Sigmoid(xv(i, h + u));
  return g.Record(std::move(out), {x}, [x, n, h](Graph<T> &g, const Tensor<T> &dy) {
    Tensor<T> *dx = g.GradTarget(x);
    if (!dx) return;
    const Tensor<T> &xv = g.value(x);
    for (int i = 0; i < n; ++i)
      for (int u = 0; u < h; ++u) {
        const T s = kernels::Sigmoid(xv(i, h + u));
        (*dx)(i, u) += dy(i, u) * s;
        (*dx)(i, h + u) += dy(i, u) * xv(i, u) * s * (T(1) - s);
      }
  });
}

template <typename T>
Var ConcatCols(Graph<T> &g, Var a, Var b) {
  const Tensor<T> &av = g.value(a);
  const Tensor<T> &bv = g.value(b);
  if (av.rows() != bv.rows())
    throw DimensionError("concat: row mismatch " + Shapes(av.shape(), bv.shape()));
  const int n = av.rows(), ca = av.cols(), cb = bv.cols();
  Tensor<T> out = Tensor<T>::Matrix(n, ca + cb);
  for (int i = 0; i < n; ++i) {
    std::copy(av.row(i), av.row(i) + ca, out.row(i));
    std::copy(bv.row(i), bv.row(i) + cb, out.row(i) + ca);
  }
  return g.Record(std::move(out), {a, b}, [a, b, n, ca, cb](Graph<T> &g, const Tensor<T> &dy) {
    if (Tensor<T> *da = g.GradTarget(a))
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < ca; ++j) (*da)(i, j) += dy(i, j);
    if (Tensor<T> *db = g.GradTarget(b))
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < cb; ++j) (*db)(i, j) += dy(i, ca + j);
  });
}

template <typename T>
Var Gather(Graph<T> &g, Var x, std::vector<int> index, std::vector<int> shape) {
  const Tensor<T> &xv = g.value(x);
  Tensor<T> out(shape);
  if (out.size() != index.size())
    throw DimensionError("gather: " + std::to_string(index.size()) +
                         " indices for output shape " + out.ShapeString());
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] < 0 || std::size_t(index[k]) >= xv.size())
      throw IndexError("gather: index " + std::to_string(index[k]) + " out of range for " +
                       xv.ShapeString());
    out[k] = xv[std::size_t(index[k])];
  }
  auto idx = std::make_shared<std::vector<int>>(std::move(index));
  return g.Record(std::move(out), {x}, [x, idx](Graph<T> &g, const Tensor<T> &dy) {
    if (Tensor<T> *dx = g.GradTarget(x))
      for (std::size_t k = 0; k < idx->size(); ++k) (*dx)[std::size_t((*idx)[k])] += dy[k];
  });
}

template <typename T>
Var GruCell(Graph<T> &g, Var x_proj, Var h_prev, Var w_h, Var b_h) {
  const Tensor<T> &xp = g.value(x_proj);
  const Tensor<T> &hp = g.value(h_prev);
  const Tensor<T> &wh = g.value(w_h);
  const int rows = hp.rows(), h = hp.cols();
  if (wh.rank() != 2 || wh.dim(0) != h || wh.dim(1) != 3 * h)
    throw DimensionError("gru: state " + hp.ShapeString() + " vs recurrent weight " +
                         wh.ShapeString());
  if (xp.rows() != rows || xp.cols() != 3 * h)
    throw DimensionError("gru: input projection " + xp.ShapeString() + " vs state " +
                         hp.ShapeString());
  if (g.value(b_h).size() != std::size_t(3 * h))
    throw DimensionError("gru: recurrent bias " + g.value(b_h).ShapeString());
  Tensor<T> out = Tensor<T>::Matrix(rows, h);
  auto cache = std::make_shared<kernels::GruCache<T>>();
  kernels::GruForward(xp.data(), hp.data(), wh.data(), g.value(b_h).data(), rows, h,
                      out.data(), g.tracking() ? cache.get() : nullptr);
  return g.Record(std::move(out), {x_proj, h_prev, w_h, b_h},
                  [=](Graph<T> &g, const Tensor<T> &dy) {
    std::vector<T> wt(std::size_t(h) * 3 * h);
    kernels::Transpose(g.value(w_h).data(), h, 3 * h, wt.data());
    Tensor<T> *dx = g.GradTarget(x_proj);
    Tensor<T> *dwh = g.GradTarget(w_h);
    Tensor<T> *dbh = g.GradTarget(b_h);
    std::vector<T> dwh_local, dh(std::size_t(rows) * h);
    if (!dwh) dwh_local.assign(std::size_t(h) * 3 * h, T(0));
    kernels::GruBackward(*cache, dy.data(), nullptr, wt.data(), rows, h,
                         dx ? dx->data() : nullptr, dwh ? dwh->data() : dwh_local.data(),
                         dbh ? dbh->data() : nullptr, dh.data());
    AddInto(g.GradTarget(h_prev), dh.data());
  });
}

template <typename T>
Var GruSequence(Graph<T> &g, Var x_proj, Var w_h, Var b_h, const Mask &mask, int batch,
                bool reverse) {
  const Tensor<T> &xp = g.value(x_proj);
  const Tensor<T> &wh = g.value(w_h);
  if (wh.rank() != 2 || wh.dim(1) != 3 * wh.dim(0))
    throw DimensionError("gru: recurrent weight " + wh.ShapeString());
  const int h = wh.dim(0);
  if (xp.cols() != 3 * h || batch <= 0 || xp.rows() % batch != 0)
    throw DimensionError("gru: input projection " + xp.ShapeString() + " vs hidden " +
                         std::to_string(h) + " and batch " + std::to_string(batch));
  if (mask.size() != std::size_t(xp.rows()))
    throw DimensionError("gru: mask length " + std::to_string(mask.size()) + " vs " +
                         std::to_string(xp.rows()) + " rows");
  const int steps = xp.rows() / batch;
  Tensor<T> out = Tensor<T>::Matrix(xp.rows(), h);
  auto caches = std::make_shared<std::vector<kernels::GruCache<T>>>(g.tracking() ? steps : 0);
  auto mask_copy = std::make_shared<Mask>(mask);
  std::vector<T> state(std::size_t(batch) * h, T(0)), next(std::size_t(batch) * h);
  const std::size_t block = std::size_t(batch) * h;
  for (int s = 0; s < steps; ++s) {
    const int t = reverse ? steps - 1 - s : s;
    kernels::GruForward(xp.data() + std::size_t(t) * batch * 3 * h, state.data(), wh.data(),
                        g.value(b_h).data(), batch, h, next.data(),
                        g.tracking() ? &(*caches)[t] : nullptr);
    for (int b = 0; b < batch; ++b)
      if (mask[std::size_t(t) * batch + b])
        std::copy(next.begin() + b * h, next.begin() + (b + 1) * h, state.begin() + b * h);
    std::copy(state.begin(), state.end(), out.data() + std::size_t(t) * block);
  }
  return g.Record(std::move(out), {x_proj, w_h, b_h}, [=](Graph<T> &g, const Tensor<T> &dy) {
    std::vector<T> wt(std::size_t(h) * 3 * h);
    kernels::Transpose(g.value(w_h).data(), h, 3 * h, wt.data());
    Tensor<T> *dx = g.GradTarget(x_proj);
    Tensor<T> *dwh = g.GradTarget(w_h);
    Tensor<T> *dbh = g.GradTarget(b_h);
    std::vector<T> dwh_local;
    if (!dwh) dwh_local.assign(std::size_t(h) * 3 * h, T(0));
    std::vector<T> carry(block, T(0)), dh(block), dprev(block);
    for (int s = steps - 1; s >= 0; --s) {
      const int t = reverse ? steps - 1 - s : s;
      const T *dyt = dy.data() + std::size_t(t) * block;
      for (std::size_t k = 0; k < block; ++k) dh[k] = dyt[k] + carry[k];
      kernels::GruBackward((*caches)[t], dh.data(), mask_copy->data() + std::size_t(t) * batch,
                           wt.data(), batch, h,
                           dx ? dx->data() + std::size_t(t) * batch * 3 * h : nullptr,
                           dwh ? dwh->data() : dwh_local.data(), dbh ? dbh->data() : nullptr,
                           dprev.data());
      carry.swap(dprev);
    }
  });
}

template <typename T>
Var AdditiveEnergies(Graph<T> &g, Var keys_proj, Var query_proj, Var score, int batch) {
  const Tensor<T> &kp = g.value(keys_proj);
  const Tensor<T> &qp = g.value(query_proj);
  const Tensor<T> &sv = g.value(score);
  const int att = kp.cols();
  if (qp.cols() != att || sv.size() != std::size_t(att))
    throw DimensionError("attention: keys " + kp.ShapeString() + ", queries " +
                         qp.ShapeString() + ", score " + sv.ShapeString());
  if (batch <= 0 || kp.rows() % batch || qp.rows() % batch)
    throw DimensionError("attention: row counts not divisible by batch " + std::to_string(batch));
  const int n_src = kp.rows() / batch, n_steps = qp.rows() / batch;
  Tensor<T> out = Tensor<T>::Matrix(batch * n_src, n_steps);
  auto act = std::make_shared<std::vector<T>>(
      g.tracking() ? std::size_t(batch) * n_src * n_steps * att : 0);
  std::vector<T> tmp(att);
  for (int b = 0; b < batch; ++b)
    for (int i = 0; i < n_src; ++i) {
      const T *k = kp.row(i * batch + b);
      for (int j = 0; j < n_steps; ++j) {
        const T *q = qp.row(j * batch + b);
        T *a = act->empty() ? tmp.data()
                            : act->data() + ((std::size_t(b) * n_src + i) * n_steps + j) * att;
        T e = 0;
        for (int u = 0; u < att; ++u) {
          a[u] = std::tanh(k[u] + q[u]);
          e += sv[u] * a[u];
        }
        out(b * n_src + i, j) = e;
      }
    }
  return g.Record(std::move(out), {keys_proj, query_proj, score},
                  [=](Graph<T> &g, const Tensor<T> &dy) {
    Tensor<T> *dk = g.GradTarget(keys_proj);
    Tensor<T> *dq = g.GradTarget(query_proj);
    Tensor<T> *ds = g.GradTarget(score);
    const Tensor<T> &sv = g.value(score);
    std::vector<T> dpre(att);
    for (int b = 0; b < batch; ++b)
      for (int i = 0; i < n_src; ++i)
        for (int j = 0; j < n_steps; ++j) {
          const T de = dy(b * n_src + i, j);
          if (de == T(0)) continue;
          const T *a = act->data() + ((std::size_t(b) * n_src + i) * n_steps + j) * att;
          for (int u = 0; u < att; ++u) dpre[u] = de * sv[u] * (T(1) - a[u] * a[u]);
          if (dk) {
            T *r = dk->row(i * batch + b);
            for (int u = 0; u < att; ++u) r[u] += dpre[u];
          }
          if (dq) {
            T *r = dq->row(j * batch + b);
            for (int u = 0; u < att; ++u) r[u] += dpre[u];
          }
          if (ds)
            for (int u = 0; u < att; ++u) (*ds)[u] += de * a[u];
        }
  });
}

template <typename T>
Var SoftmaxMasked(Graph<T> &g, Var e, const Mask &mask, int group_rows) {
  const Tensor<T> &ev = g.value(e);
  if (mask.size() != ev.size())
    throw DimensionError("softmax: mask size " + std::to_string(mask.size()) + " vs " +
                         ev.ShapeString());
  if (group_rows <= 0 || ev.rows() % group_rows)
    throw DimensionError("softmax: " + std::to_string(ev.rows()) +
                         " rows not divisible into groups of " + std::to_string(group_rows));
  const int groups = ev.rows() / group_rows, cols = ev.cols();
  Tensor<T> out(ev.shape());
  for (int b = 0; b < groups; ++b)
    for (int j = 0; j < cols; ++j) {
      T mx = -std::numeric_limits<T>::infinity();
      bool any = false;
      for (int i = 0; i < group_rows; ++i) {
        const int r = b * group_rows + i;
        if (!mask[std::size_t(r) * cols + j]) continue;
        mx = std::max(mx, ev(r, j));
        any = true;
      }
      if (!any)
        throw InvalidMaskError("column " + std::to_string(j) + " of block " +
                               std::to_string(b) + " is fully masked");
      T sum = 0;
      for (int i = 0; i < group_rows; ++i) {
        const int r = b * group_rows + i;
        if (!mask[std::size_t(r) * cols + j]) continue;
        out(r, j) = std::exp(ev(r, j) - mx);
        sum += out(r, j);
      }
      for (int i = 0; i < group_rows; ++i) out(b * group_rows + i, j) /= sum;
    }
  auto y = std::make_shared<Var>();
  *y = g.Record(std::move(out), {e}, [e, y, groups, group_rows, cols](Graph<T> &g,
                                                                     const Tensor<T> &dy) {
    Tensor<T> *de = g.GradTarget(e);
    if (!de) return;
    const Tensor<T> &a = g.value(*y);
    for (int b = 0; b < groups; ++b)
      for (int j = 0; j < cols; ++j) {
        T dot = 0;
        for (int i = 0; i < group_rows; ++i) {
          const int r = b * group_rows + i;
          dot += a(r, j) * dy(r, j);
        }
        for (int i = 0; i < group_rows; ++i) {
          const int r = b * group_rows + i;
          (*de)(r, j) += a(r, j) * (dy(r, j) - dot);
        }
      }
  });
  return *y;
}

template <typename T>
Var AttentionContext(Graph<T> &g, Var attn, Var keys, int batch) {
  const Tensor<T> &av = g.value(attn);
  const Tensor<T> &kv = g.value(keys);
  if (batch <= 0 || kv.rows() % batch || av.rows() != kv.rows())
    throw DimensionError("context: attention " + av.ShapeString() + " vs keys " +
                         kv.ShapeString());
  const int n_src = kv.rows() / batch, n_steps = av.cols(), hd = kv.cols();
  Tensor<T> out = Tensor<T>::Matrix(n_steps * batch, hd);
  for (int j = 0; j < n_steps; ++j)
    for (int b = 0; b < batch; ++b) {
      T *o = out.row(j * batch + b);
      for (int i = 0; i < n_src; ++i) {
        const T a = av(b * n_src + i, j);
        const T *k = kv.row(i * batch + b);
        for (int u = 0; u < hd; ++u) o[u] += a * k[u];
      }
    }
  return g.Record(std::move(out), {attn, keys}, [=](Graph<T> &g, const Tensor<T> &dy) {
    Tensor<T> *da = g.GradTarget(attn);
    Tensor<T> *dk = g.GradTarget(keys);
    const Tensor<T> &av = g.value(attn);
    const Tensor<T> &kv = g.value(keys);
    for (int j = 0; j < n_steps; ++j)
      for (int b = 0; b < batch; ++b) {
        const T *d = dy.row(j * batch + b);
        for (int i = 0; i < n_src; ++i) {
          const T *k = kv.row(i * batch + b);
          if (da) {
            T s = 0;
            for (int u = 0; u < hd; ++u) s += d[u] * k[u];
            (*da)(b * n_src + i, j) += s;
          }
          if (dk) {
            const T a = av(b * n_src + i, j);
            T *r = dk->row(i * batch + b);
            for (int u = 0; u < hd; ++u) r[u] += a * d[u];
          }
        }
      }
  });
}

template <typename T>
Var L1Masked(Graph<T> &g, Var pred, Var target, const Mask &row_mask) {
  const Tensor<T> &pv = g.value(pred);
  const Tensor<T> &tv = g.value(target);
  RequireSameShape(pv, tv, "l1");
  if (row_mask.size() != std::size_t(pv.rows()))
    throw DimensionError("l1: mask length " + std::to_string(row_mask.size()) + " vs " +
                         std::to_string(pv.rows()) + " rows");
  const std::size_t valid = CountValid(row_mask);
  if (valid == 0) throw InvalidMaskError("l1: no valid frames");
  const int n = pv.rows(), d = pv.cols();
  const T denom = T(valid * std::size_t(d));
  T s = 0;
  for (int i = 0; i < n; ++i) {
    if (!row_mask[i]) continue;
    for (int j = 0; j < d; ++j) s += std::abs(pv(i, j) - tv(i, j));
  }
  auto m = std::make_shared<Mask>(row_mask);
  return g.Record(Tensor<T>::Scalar(s / denom), {pred, target},
                  [=](Graph<T> &g, const Tensor<T> &dy) {
    Tensor<T> *dp = g.GradTarget(pred);
    Tensor<T> *dt = g.GradTarget(target);
    const Tensor<T> &pv = g.value(pred);
    const Tensor<T> &tv = g.value(target);
    const T scale = dy[0] / denom;
    for (int i = 0; i < n; ++i) {
      if (!(*m)[i]) continue;
      for (int j = 0; j < d; ++j) {
        const T diff = pv(i, j) - tv(i, j);
        const T sgn = diff > 0 ? T(1) : (diff < 0 ? T(-1) : T(0));
        if (dp) (*dp)(i, j) += scale * sgn;
        if (dt) (*dt)(i, j) -= scale * sgn;
      }
    }
  });
}

template <typename T>
Var WeightedMean(Graph<T> &g, Var x, const Tensor<T> &weights, const Mask &mask) {
  const Tensor<T> &xv = g.value(x);
  RequireSameShape(xv, weights, "weighted mean");
  if (mask.size() != xv.size())
    throw DimensionError("weighted mean: mask size " + std::to_string(mask.size()) + " vs " +
                         xv.ShapeString());
  const std::size_t valid = CountValid(mask);
  if (valid == 0) throw InvalidMaskError("weighted mean: no valid entries");
  T s = 0;
  for (std::size_t k = 0; k < xv.size(); ++k)
    if (mask[k]) s += weights[k] * xv[k];
  const T denom = T(valid);
  auto w = std::make_shared<Tensor<T>>(weights);
  auto m = std::make_shared<Mask>(mask);
  return g.Record(Tensor<T>::Scalar(s / denom), {x}, [=](Graph<T> &g, const Tensor<T> &dy) {
    if (Tensor<T> *dx = g.GradTarget(x))
      for (std::size_t k = 0; k < dx->size(); ++k)
        if ((*m)[k]) (*dx)[k] += dy[0] * (*w)[k] / denom;
  });
}

template <typename T>
Var BceWithLogits(Graph<T> &g, Var logits, const Tensor<T> &targets, double pos_weight,
                  const Mask &mask) {
  const Tensor<T> &lv = g.value(logits);
  if (lv.size() != targets.size() || mask.size() != lv.size())
    throw DimensionError("bce: logits " + lv.ShapeString() + ", targets " +
                         targets.ShapeString() + ", mask " + std::to_string(mask.size()));
  const std::size_t valid = CountValid(mask);
  if (valid == 0) throw InvalidMaskError("bce: no valid entries");
  const T wp = T(pos_weight);
  // softplus(x) = log(1 + e^x), computed without overflow.
  auto softplus = [](T x) { return std::max(x, T(0)) + std::log1p(std::exp(-std::abs(x))); };
  T s = 0;
  for (std::size_t k = 0; k < lv.size(); ++k) {
    if (!mask[k]) continue;
    const T x = lv[k], t = targets[k];
    s += wp * t * softplus(-x) + (T(1) - t) * softplus(x);
  }
  const T denom = T(valid);
  auto tg = std::make_shared<Tensor<T>>(targets);
  auto m = std::make_shared<Mask>(mask);
  return g.Record(Tensor<T>::Scalar(s / denom), {logits}, [=](Graph<T> &g, const Tensor<T> &dy) {
    Tensor<T> *dl = g.GradTarget(logits);
    if (!dl) return;
    const Tensor<T> &lv = g.value(logits);
    for (std::size_t k = 0; k < lv.size(); ++k) {
      if (!(*m)[k]) continue;
      const T p = kernels::Sigmoid(lv[k]), t = (*tg)[k];
      (*dl)[k] += dy[0] * (wp * t * (p - T(1)) + (T(1) - t) * p) / denom;
    }
  });
}

#define ATTS2S_INSTANTIATE_OPS(T)                                                        \
  template Var Linear<T>(Graph<T> &, Var, Var, Var);                                     \
  template Var Add<T>(Graph<T> &, Var, Var);                                             \
  template Var Sub<T>(Graph<T> &, Var, Var);                                             \
  template Var Mul<T>(Graph<T> &, Var, Var);                                             \
  template Var Scale<T>(Graph<T> &, Var, double);                                        \
  template Var Sum<T>(Graph<T> &, Var);                                                  \
  template Var Sigmoid<T>(Graph<T> &, Var);                                              \
  template Var Tanh<T>(Graph<T> &, Var);                                                 \
  template Var Glu<T>(Graph<T> &, Var);                                                  \
  template Var ConcatCols<T>(Graph<T> &, Var, Var);                                      \
  template Var Gather<T>(Graph<T> &, Var, std::vector<int>, std::vector<int>);           \
  template Var GruCell<T>(Graph<T> &, Var, Var, Var, Var);                               \
  template Var GruSequence<T>(Graph<T> &, Var, Var, Var, const Mask &, int, bool);       \
  template Var AdditiveEnergies<T>(Graph<T> &, Var, Var, Var, int);                      \
  template Var SoftmaxMasked<T>(Graph<T> &, Var, const Mask &, int);                     \
  template Var AttentionContext<T>(Graph<T> &, Var, Var, int);                           \
  template Var L1Masked<T>(Graph<T> &, Var, Var, const Mask &);                          \
  template Var WeightedMean<T>(Graph<T> &, Var, const Tensor<T> &, const Mask &);        \
  template Var BceWithLogits<T>(Graph<T> &, Var, const Tensor<T> &, double, const Mask &);

ATTS2S_INSTANTIATE_OPS(float)
ATTS2S_INSTANTIATE_OPS(double)

}  // namespace atts2s
