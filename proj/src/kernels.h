// src/kernels.h

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

// Internal dense kernels. Reductions run in a fixed order over the row index,
// so results are bitwise reproducible and independent of batch composition.

#ifndef ATTS2S_SRC_KERNELS_H_
#define ATTS2S_SRC_KERNELS_H_

#include <cmath>
#include <cstddef>
#include <vector>

namespace atts2s {
namespace kernels {

/// c[n x m] += a[n x k] * b[k x m]
template <typename T>
void MatMulAcc(const T *a, int n, int k, const T *b, int m, T *c) {
  for (int i = 0; i < n; ++i) {
    const T *ai = a + std::size_t(i) * k;
    T *ci = c + std::size_t(i) * m;
    for (int p = 0; p < k; ++p) {
      const T s = ai[p];
      const T *bp = b + std::size_t(p) * m;
      for (int j = 0; j < m; ++j) ci[j] += s * bp[j];
    }
  }
}

/// c[k x m] += a[n x k]^T * b[n x m]
template <typename T>
void MatMulTransAAcc(const T *a, int n, int k, const T *b, int m, T *c) {
  for (int i = 0; i < n; ++i) {
    const T *ai = a + std::size_t(i) * k;
    const T *bi = b + std::size_t(i) * m;
    for (int p = 0; p < k; ++p) {
      const T s = ai[p];
      T *cp = c + std::size_t(p) * m;
      for (int j = 0; j < m; ++j) cp[j] += s * bi[j];
    }
  }
}

/// out[m x k] = in[k x m]^T
template <typename T>
void Transpose(const T *in, int k, int m, T *out) {
  for (int p = 0; p < k; ++p)
    for (int j = 0; j < m; ++j) out[std::size_t(j) * k + p] = in[std::size_t(p) * m + j];
}

template <typename T>
inline T Sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

/// Saved activations of one GRU update over `rows` rows.
template <typename T>
struct GruCache {
  std::vector<T> h_prev;  // rows x h
  std::vector<T> gates;   // rows x 3h: r, z, c
  std::vector<T> rec_c;   // rows x h: h W_c + b_c
};

/// Forward GRU update. `x_proj` is rows x 3h, `h_prev` rows x h. Writes
/// rows x h into `h_out` and fills `cache` when non-null.
template <typename T>
void GruForward(const T *x_proj, const T *h_prev, const T *w_h, const T *b_h,
                int rows, int h, T *h_out, GruCache<T> *cache) {
  const int h3 = 3 * h;
  std::vector<T> rec(std::size_t(rows) * h3);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < h3; ++j) rec[std::size_t(i) * h3 + j] = b_h[j];
  MatMulAcc(h_prev, rows, h, w_h, h3, rec.data());
  if (cache) {
    cache->h_prev.assign(h_prev, h_prev + std::size_t(rows) * h);
    cache->gates.resize(std::size_t(rows) * h3);
    cache->rec_c.resize(std::size_t(rows) * h);
  }
  for (int i = 0; i < rows; ++i) {
    const T *xp = x_proj + std::size_t(i) * h3;
    const T *rp = rec.data() + std::size_t(i) * h3;
    const T *hp = h_prev + std::size_t(i) * h;
    T *ho = h_out + std::size_t(i) * h;
    for (int u = 0; u < h; ++u) {
      const T r = Sigmoid(xp[u] + rp[u]);
      const T z = Sigmoid(xp[h + u] + rp[h + u]);
      const T c = std::tanh(xp[2 * h + u] + r * rp[2 * h + u]);
      ho[u] = (T(1) - z) * hp[u] + z * c;
      if (cache) {
        T *gt = cache->gates.data() + std::size_t(i) * h3;
        gt[u] = r;
        gt[h + u] = z;
        gt[2 * h + u] = c;
        cache->rec_c[std::size_t(i) * h + u] = rp[2 * h + u];
      }
    }
  }
}

/// Backward of GruForward for the rows flagged in `active` (nullptr = all).
/// Inactive rows pass `dh` straight through to `dh_prev` and contribute
/// nothing else. Accumulates into dx_proj (may be null), dw_h, db_h (may be
/// null); overwrites dh_prev.
template <typename T>
void GruBackward(const GruCache<T> &cache, const T *dh, const unsigned char *active,
                 const T *w_h_t, int rows, int h, T *dx_proj, T *dw_h, T *db_h,
                 T *dh_prev) {
  const int h3 = 3 * h;
  std::vector<T> drec(std::size_t(rows) * h3, T(0));
  for (int i = 0; i < rows; ++i) {
    const T *d = dh + std::size_t(i) * h;
    T *dp = dh_prev + std::size_t(i) * h;
    if (active && !active[i]) {
      for (int u = 0; u < h; ++u) dp[u] = d[u];
      continue;
    }
    const T *gt = cache.gates.data() + std::size_t(i) * h3;
    const T *hp = cache.h_prev.data() + std::size_t(i) * h;
    const T *rc = cache.rec_c.data() + std::size_t(i) * h;
    T *dr = drec.data() + std::size_t(i) * h3;
    T *dx = dx_proj ? dx_proj + std::size_t(i) * h3 : nullptr;
    for (int u = 0; u < h; ++u) {
      const T r = gt[u], z = gt[h + u], c = gt[2 * h + u];
      const T dz = d[u] * (c - hp[u]);
      const T dc = d[u] * z;
      const T dac = dc * (T(1) - c * c);
      const T drg = dac * rc[u];
      const T dar = drg * r * (T(1) - r);
      const T daz = dz * z * (T(1) - z);
      dr[u] = dar;
      dr[h + u] = daz;
      dr[2 * h + u] = dac * r;
      if (dx) {
        dx[u] += dar;
        dx[h + u] += daz;
        dx[2 * h + u] += dac;
      }
      dp[u] = d[u] * (T(1) - z);
    }
  }
  MatMulAcc(drec.data(), rows, h3, w_h_t, h, dh_prev);
  MatMulTransAAcc(cache.h_prev.data(), rows, h, drec.data(), h3, dw_h);
  if (db_h)
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < h3; ++j) db_h[j] += drec[std::size_t(i) * h3 + j];
}

}  // namespace kernels
}  // namespace atts2s

#endif  // ATTS2S_SRC_KERNELS_H_
