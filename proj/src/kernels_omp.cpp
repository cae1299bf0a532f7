#include <cmath>
#include <cstring>
#include <vector>

#include "kernels_detail.hpp"

// OpenMP twin of kernels_serial.cpp: identical inner loops (shared via
// kernels_detail.hpp), distributed over independent instances/output rows,
// so results match the serial reference bit-for-bit at any thread count.

namespace herdmetric::kernels::omp {

void gray_scott_step(const double* u, const double* v, double* u_next,
                     double* v_next, int h, int w, const GsRates& r) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < h; ++i) {
    const int up = (i + h - 1) % h;
    const int dn = (i + 1) % h;
    for (int j = 0; j < w; ++j) {
      const int lf = (j + w - 1) % w;
      const int rt = (j + 1) % w;
      const double uc = u[i * w + j];
      const double vc = v[i * w + j];
      const double lap_u = u[up * w + j] + u[dn * w + j] + u[i * w + lf] + u[i * w + rt] - 4.0 * uc;
      const double lap_v = v[up * w + j] + v[dn * w + j] + v[i * w + lf] + v[i * w + rt] - 4.0 * vc;
      const double uvv = uc * vc * vc;
      u_next[i * w + j] = uc + r.dt * (r.Du * lap_u - uvv + r.F * (1.0 - uc));
      v_next[i * w + j] = vc + r.dt * (r.Dv * lap_v + uvv - (r.F + r.k) * vc);
    }
  }
}

void conv2d_forward(const double* in, const double* w, const double* b,
                    double* out, const Conv2dShape& s) {
  const int T = detail::col_rows(s), J = detail::col_cols(s);
  const std::size_t in_stride = static_cast<std::size_t>(s.c_in) * s.h_in * s.w_in;
#pragma omp parallel
  {
    std::vector<double> col(static_cast<std::size_t>(T) * J);
#pragma omp for schedule(static)
    for (int n = 0; n < s.n; ++n) {
      detail::im2col_one(in + n * in_stride, col.data(), s);
      detail::conv_forward_one(col.data(), w, b,
                               out + static_cast<std::size_t>(n) * s.c_out * J, s);
    }
  }
}

void conv2d_backward_input(const double* g_out, const double* w, double* g_in,
                           const Conv2dShape& s) {
  const int T = detail::col_rows(s), J = detail::col_cols(s);
  const std::size_t in_stride = static_cast<std::size_t>(s.c_in) * s.h_in * s.w_in;
#pragma omp parallel
  {
    std::vector<double> gcol(static_cast<std::size_t>(T) * J);
#pragma omp for schedule(static)
    for (int n = 0; n < s.n; ++n) {
      detail::conv_backward_input_one(g_out + static_cast<std::size_t>(n) * s.c_out * J, w,
                                      g_in + n * in_stride, gcol.data(), s);
    }
  }
}

void conv2d_backward_params(const double* g_out, const double* in, double* g_w,
                            double* g_b, const Conv2dShape& s) {
  const int T = detail::col_rows(s), J = detail::col_cols(s);
  const std::size_t in_stride = static_cast<std::size_t>(s.c_in) * s.h_in * s.w_in;
  std::vector<double> col(static_cast<std::size_t>(s.n) * T * J);
#pragma omp parallel for schedule(static)
  for (int n = 0; n < s.n; ++n)
    detail::im2col_one(in + n * in_stride, col.data() + static_cast<std::size_t>(n) * T * J, s);

#pragma omp parallel for schedule(static)
  for (int oc = 0; oc < s.c_out; ++oc) {
    double* gw = g_w + static_cast<std::size_t>(oc) * T;
    std::fill(gw, gw + T, 0.0);
    double gb = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const double* grow = g_out + (static_cast<std::size_t>(n) * s.c_out + oc) * J;
      const double* ncol = col.data() + static_cast<std::size_t>(n) * T * J;
      for (int t = 0; t < T; ++t)
        gw[t] += detail::dot(grow, ncol + static_cast<std::size_t>(t) * J, J);
      for (int j = 0; j < J; ++j) gb += grow[j];
    }
    g_b[oc] = gb;
  }
}

void relu_forward(const double* in, double* out, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i)
    out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void relu_backward(const double* g_out, const double* pre, double* g_in, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i)
    g_in[i] = pre[i] > 0.0 ? g_out[i] : 0.0;
}

void fc_forward(const double* in, const double* w, const double* b, double* out,
                int n, int f, int o) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < o; ++j) {
      const double* x = in + static_cast<std::size_t>(i) * f;
      out[static_cast<std::size_t>(i) * o + j] =
          b[j] + detail::dot(w + static_cast<std::size_t>(j) * f, x, f);
    }
  }
}

void fc_backward_input(const double* g_out, const double* w, double* g_in,
                       int n, int f, int o) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const double* g = g_out + static_cast<std::size_t>(i) * o;
    double* gi = g_in + static_cast<std::size_t>(i) * f;
    std::fill(gi, gi + f, 0.0);
    for (int j = 0; j < o; ++j) detail::axpy(g[j], w + static_cast<std::size_t>(j) * f, gi, f);
  }
}

void fc_backward_params(const double* g_out, const double* in, double* g_w,
                        double* g_b, int n, int f, int o) {
#pragma omp parallel for schedule(static)
  for (int j = 0; j < o; ++j) {
    double* gw = g_w + static_cast<std::size_t>(j) * f;
    std::fill(gw, gw + f, 0.0);
    double gb = 0.0;
    for (int i = 0; i < n; ++i) {
      detail::axpy(g_out[static_cast<std::size_t>(i) * o + j],
                   in + static_cast<std::size_t>(i) * f, gw, f);
      gb += g_out[static_cast<std::size_t>(i) * o + j];
    }
    g_b[j] = gb;
  }
}

void pairwise_distances(const double* x, double* out, int n, int d) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double* a = x + static_cast<std::size_t>(i) * d;
      const double* b = x + static_cast<std::size_t>(j) * d;
      double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
      int t = 0;
      for (; t + 4 <= d; t += 4) {
        const double d0 = a[t] - b[t];
        const double d1 = a[t + 1] - b[t + 1];
        const double d2 = a[t + 2] - b[t + 2];
        const double d3 = a[t + 3] - b[t + 3];
        acc0 += d0 * d0;
        acc1 += d1 * d1;
        acc2 += d2 * d2;
        acc3 += d3 * d3;
      }
      for (; t < d; ++t) {
        const double dd = a[t] - b[t];
        acc0 += dd * dd;
      }
      out[static_cast<std::size_t>(i) * n + j] = std::sqrt((acc0 + acc1) + (acc2 + acc3));
    }
  }
}

}  // namespace herdmetric::kernels::omp
