#include "herdmetric/kernels.hpp"

namespace herdmetric::kernels {

namespace {
Backend g_backend = omp_available() ? Backend::omp : Backend::serial;
}

bool omp_available() {
#ifdef HERDMETRIC_HAVE_OPENMP
  return true;
#else
  return false;
#endif
}

void set_backend(Backend b) {
  g_backend = (b == Backend::omp && !omp_available()) ? Backend::serial : b;
}

Backend backend() { return g_backend; }

#define HM_DISPATCH(fn, ...)                  \
  do {                                        \
    if (g_backend == Backend::omp)            \
      omp::fn(__VA_ARGS__);                   \
    else                                      \
      serial::fn(__VA_ARGS__);                \
  } while (0)

void gray_scott_step(const double* u, const double* v, double* u_next,
                     double* v_next, int h, int w, const GsRates& r) {
  HM_DISPATCH(gray_scott_step, u, v, u_next, v_next, h, w, r);
}
void conv2d_forward(const double* in, const double* w, const double* b,
                    double* out, const Conv2dShape& s) {
  HM_DISPATCH(conv2d_forward, in, w, b, out, s);
}
void conv2d_backward_input(const double* g_out, const double* w, double* g_in,
                           const Conv2dShape& s) {
  HM_DISPATCH(conv2d_backward_input, g_out, w, g_in, s);
}
void conv2d_backward_params(const double* g_out, const double* in, double* g_w,
                            double* g_b, const Conv2dShape& s) {
  HM_DISPATCH(conv2d_backward_params, g_out, in, g_w, g_b, s);
}
void relu_forward(const double* in, double* out, std::size_t n) {
  HM_DISPATCH(relu_forward, in, out, n);
}
void relu_backward(const double* g_out, const double* pre, double* g_in, std::size_t n) {
  HM_DISPATCH(relu_backward, g_out, pre, g_in, n);
}
void fc_forward(const double* in, const double* w, const double* b, double* out,
                int n, int f, int o) {
  HM_DISPATCH(fc_forward, in, w, b, out, n, f, o);
}
void fc_backward_input(const double* g_out, const double* w, double* g_in,
                       int n, int f, int o) {
  HM_DISPATCH(fc_backward_input, g_out, w, g_in, n, f, o);
}
void fc_backward_params(const double* g_out, const double* in, double* g_w,
                        double* g_b, int n, int f, int o) {
  HM_DISPATCH(fc_backward_params, g_out, in, g_w, g_b, n, f, o);
}
void pairwise_distances(const double* x, double* out, int n, int d) {
  HM_DISPATCH(pairwise_distances, x, out, n, d);
}

#undef HM_DISPATCH

}  // namespace herdmetric::kernels
