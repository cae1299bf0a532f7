#pragma once

#include <cstddef>

namespace herdmetric::kernels {

// Every kernel exists twice: a plain serial reference and an OpenMP version.
// Both compute each output element with identical scalar code and a fixed
// per-element summation order, so the two backends agree bit-for-bit and the
// OpenMP results do not depend on the thread count. Tests assert exact
// equality; herd-bench times the two side by side.
enum class Backend { serial, omp };

void set_backend(Backend b);
Backend backend();
bool omp_available();

struct GsRates {
  double Du;
  double Dv;
  double F;
  double k;
  double dt;
};

// One Gray-Scott update with periodic boundaries. Reads (u, v), writes
// (u_next, v_next); buffers must not alias.
void gray_scott_step(const double* u, const double* v, double* u_next,
                     double* v_next, int h, int w, const GsRates& r);

struct Conv2dShape {
  int n;     // batch
  int c_in;
  int h_in;
  int w_in;
  int c_out;
  int k;      // kernel side
  int stride;
  int pad;
  int h_out() const { return (h_in + 2 * pad - k) / stride + 1; }
  int w_out() const { return (w_in + 2 * pad - k) / stride + 1; }
};

// Layout NCHW for activations, [c_out][c_in][k][k] for weights.
void conv2d_forward(const double* in, const double* w, const double* b,
                    double* out, const Conv2dShape& s);
void conv2d_backward_input(const double* g_out, const double* w, double* g_in,
                           const Conv2dShape& s);
void conv2d_backward_params(const double* g_out, const double* in, double* g_w,
                            double* g_b, const Conv2dShape& s);

void relu_forward(const double* in, double* out, std::size_t n);
// g_in = g_out where pre-activation > 0, else 0.
void relu_backward(const double* g_out, const double* pre, double* g_in, std::size_t n);

// in: [n][f], w: [o][f], out: [n][o]
void fc_forward(const double* in, const double* w, const double* b, double* out,
                int n, int f, int o);
void fc_backward_input(const double* g_out, const double* w, double* g_in,
                       int n, int f, int o);
void fc_backward_params(const double* g_out, const double* in, double* g_w,
                        double* g_b, int n, int f, int o);

// out[i*n+j] = Euclidean distance between rows i and j of x ([n][d]).
void pairwise_distances(const double* x, double* out, int n, int d);

namespace serial {
void gray_scott_step(const double* u, const double* v, double* u_next,
                     double* v_next, int h, int w, const GsRates& r);
void conv2d_forward(const double* in, const double* w, const double* b,
                    double* out, const Conv2dShape& s);
void conv2d_backward_input(const double* g_out, const double* w, double* g_in,
                           const Conv2dShape& s);
void conv2d_backward_params(const double* g_out, const double* in, double* g_w,
                            double* g_b, const Conv2dShape& s);
void relu_forward(const double* in, double* out, std::size_t n);
void relu_backward(const double* g_out, const double* pre, double* g_in, std::size_t n);
void fc_forward(const double* in, const double* w, const double* b, double* out,
                int n, int f, int o);
void fc_backward_input(const double* g_out, const double* w, double* g_in,
                       int n, int f, int o);
void fc_backward_params(const double* g_out, const double* in, double* g_w,
                        double* g_b, int n, int f, int o);
void pairwise_distances(const double* x, double* out, int n, int d);
}  // namespace serial

namespace omp {
void gray_scott_step(const double* u, const double* v, double* u_next,
                     double* v_next, int h, int w, const GsRates& r);
void conv2d_forward(const double* in, const double* w, const double* b,
                    double* out, const Conv2dShape& s);
void conv2d_backward_input(const double* g_out, const double* w, double* g_in,
                           const Conv2dShape& s);
void conv2d_backward_params(const double* g_out, const double* in, double* g_w,
                            double* g_b, const Conv2dShape& s);
void relu_forward(const double* in, double* out, std::size_t n);
void relu_backward(const double* g_out, const double* pre, double* g_in, std::size_t n);
void fc_forward(const double* in, const double* w, const double* b, double* out,
                int n, int f, int o);
void fc_backward_input(const double* g_out, const double* w, double* g_in,
                       int n, int f, int o);
void fc_backward_params(const double* g_out, const double* in, double* g_w,
                        double* g_b, int n, int f, int o);
void pairwise_distances(const double* x, double* out, int n, int d);
}  // namespace omp

}  // namespace herdmetric::kernels
