#pragma once

#include <algorithm>
#include <cstring>
#include <vector>

#include "herdmetric/kernels.hpp"

// Shared inner loops for the serial and OpenMP kernel backends. Both
// backends inline exactly these helpers, so element-level arithmetic and
// summation order are identical by construction.
//
// Convolutions go through an im2col buffer: col[n][t][j] with
// t = (ic, ky, kx) and j = (oy, ox), zeros where the window leaves the
// padded input. Every output element then accumulates its terms in t order
// over contiguous rows, which vectorizes without reassociation.

namespace herdmetric::kernels::detail {

// Four-lane dot product with a fixed combine order; the independent
// accumulator lanes are what lets the compiler vectorize an FP reduction
// without changing the result.
inline double dot(const double* a, const double* b, int len) {
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  int t = 0;
  for (; t + 4 <= len; t += 4) {
    acc0 += a[t] * b[t];
    acc1 += a[t + 1] * b[t + 1];
    acc2 += a[t + 2] * b[t + 2];
    acc3 += a[t + 3] * b[t + 3];
  }
  for (; t < len; ++t) acc0 += a[t] * b[t];
  return (acc0 + acc1) + (acc2 + acc3);
}

inline void axpy(double alpha, const double* x, double* y, int len) {
  for (int i = 0; i < len; ++i) y[i] += alpha * x[i];
}

inline int col_rows(const Conv2dShape& s) { return s.c_in * s.k * s.k; }
inline int col_cols(const Conv2dShape& s) { return s.h_out() * s.w_out(); }

// Valid ox range so that ix = ox*stride + kx - pad lands in [0, w_in).
inline void ox_range(int kx, const Conv2dShape& s, int& lo, int& hi) {
  const int wo = s.w_out();
  lo = kx >= s.pad ? 0 : (s.pad - kx + s.stride - 1) / s.stride;
  const int max_ix = s.w_in - 1 - kx + s.pad;
  hi = max_ix < 0 ? 0 : std::min(wo, max_ix / s.stride + 1);
  lo = std::min(lo, hi);
}

// One instance's input plane stack -> its im2col block.
inline void im2col_one(const double* in, double* col, const Conv2dShape& s) {
  const int ho = s.h_out(), wo = s.w_out();
  const int J = ho * wo;
  double* row = col;
  for (int ic = 0; ic < s.c_in; ++ic) {
    const double* plane = in + static_cast<std::size_t>(ic) * s.h_in * s.w_in;
    for (int ky = 0; ky < s.k; ++ky) {
      for (int kx = 0; kx < s.k; ++kx, row += J) {
        int lo, hi;
        ox_range(kx, s, lo, hi);
        const int off = kx - s.pad;
        for (int oy = 0; oy < ho; ++oy) {
          double* out = row + oy * wo;
          const int iy = oy * s.stride + ky - s.pad;
          if (iy < 0 || iy >= s.h_in) {
            std::memset(out, 0, static_cast<std::size_t>(wo) * sizeof(double));
            continue;
          }
          const double* src = plane + static_cast<std::size_t>(iy) * s.w_in;
          for (int ox = 0; ox < lo; ++ox) out[ox] = 0.0;
          for (int ox = lo; ox < hi; ++ox) out[ox] = src[ox * s.stride + off];
          for (int ox = hi; ox < wo; ++ox) out[ox] = 0.0;
        }
      }
    }
  }
}

// out[oc][:] = b[oc] + sum_t w[oc][t] * col[t][:]
inline void conv_forward_one(const double* col, const double* w, const double* b,
                             double* out, const Conv2dShape& s) {
  const int T = col_rows(s), J = col_cols(s);
  for (int oc = 0; oc < s.c_out; ++oc) {
    double* orow = out + static_cast<std::size_t>(oc) * J;
    std::fill(orow, orow + J, b[oc]);
    const double* wrow = w + static_cast<std::size_t>(oc) * T;
    for (int t = 0; t < T; ++t) axpy(wrow[t], col + static_cast<std::size_t>(t) * J, orow, J);
  }
}

// gcol[t][:] = sum_oc w[oc][t] * g_out[oc][:], then scattered back onto the
// input plane (col2im, adding).
inline void conv_backward_input_one(const double* g_out, const double* w, double* g_in,
                                    double* gcol, const Conv2dShape& s) {
  const int T = col_rows(s), J = col_cols(s);
  const int ho = s.h_out(), wo = s.w_out();
  std::memset(gcol, 0, static_cast<std::size_t>(T) * J * sizeof(double));
  for (int oc = 0; oc < s.c_out; ++oc) {
    const double* grow = g_out + static_cast<std::size_t>(oc) * J;
    const double* wrow = w + static_cast<std::size_t>(oc) * T;
    for (int t = 0; t < T; ++t) axpy(wrow[t], grow, gcol + static_cast<std::size_t>(t) * J, J);
  }
  std::memset(g_in, 0,
              static_cast<std::size_t>(s.c_in) * s.h_in * s.w_in * sizeof(double));
  const double* row = gcol;
  for (int ic = 0; ic < s.c_in; ++ic) {
    double* plane = g_in + static_cast<std::size_t>(ic) * s.h_in * s.w_in;
    for (int ky = 0; ky < s.k; ++ky) {
      for (int kx = 0; kx < s.k; ++kx, row += J) {
        int lo, hi;
        ox_range(kx, s, lo, hi);
        const int off = kx - s.pad;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * s.stride + ky - s.pad;
          if (iy < 0 || iy >= s.h_in) continue;
          double* dst = plane + static_cast<std::size_t>(iy) * s.w_in;
          const double* src = row + oy * wo;
          for (int ox = lo; ox < hi; ++ox) dst[ox * s.stride + off] += src[ox];
        }
      }
    }
  }
}

}  // namespace herdmetric::kernels::detail
