// Times every kernel's serial reference against the OpenMP version and
// checks that the two agree bit-for-bit on the benchmarked inputs.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "herdmetric/kernels.hpp"
#include "herdmetric/rng.hpp"

using namespace herdmetric;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

template <typename F>
double time_ms(int iters, F&& f) {
  f();  // warm up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < iters; ++i) f();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / iters;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

void report(const char* name, double serial_ms, double omp_ms, bool identical) {
  std::printf("%-24s serial %9.3f ms   omp %9.3f ms   speedup %5.2fx   %s\n", name,
              serial_ms, omp_ms, serial_ms / omp_ms, identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
  Rng rng(123);
  const int iters = 10;
  std::printf("herdmetric kernel benchmark (omp %savailable)\n\n",
              kernels::omp_available() ? "" : "not ");

  {
    const int n = 256;
    const kernels::GsRates rates{0.16, 0.08, 0.060, 0.062, 1.0};
    auto u = random_vec(n * n, rng);
    auto v = random_vec(n * n, rng);
    std::vector<double> us(n * n), vs(n * n), uo(n * n), vo(n * n);
    const double ts = time_ms(iters, [&] {
      for (int s = 0; s < 50; ++s)
        kernels::serial::gray_scott_step(u.data(), v.data(), us.data(), vs.data(), n, n, rates);
    });
    const double to = time_ms(iters, [&] {
      for (int s = 0; s < 50; ++s)
        kernels::omp::gray_scott_step(u.data(), v.data(), uo.data(), vo.data(), n, n, rates);
    });
    report("gray_scott_step 256^2", ts, to, bit_equal(us, uo) && bit_equal(vs, vo));
  }

  {
    kernels::Conv2dShape s{16, 8, 32, 32, 16, 3, 2, 1};
    const auto in = random_vec(static_cast<std::size_t>(s.n) * s.c_in * s.h_in * s.w_in, rng);
    const auto w = random_vec(static_cast<std::size_t>(s.c_out) * s.c_in * s.k * s.k, rng);
    const auto b = random_vec(s.c_out, rng);
    const std::size_t out_n = static_cast<std::size_t>(s.n) * s.c_out * s.h_out() * s.w_out();
    std::vector<double> outs(out_n), outo(out_n);
    const double ts = time_ms(iters, [&] {
      kernels::serial::conv2d_forward(in.data(), w.data(), b.data(), outs.data(), s);
    });
    const double to = time_ms(iters, [&] {
      kernels::omp::conv2d_forward(in.data(), w.data(), b.data(), outo.data(), s);
    });
    report("conv2d_forward 16x8ch", ts, to, bit_equal(outs, outo));

    const auto g = random_vec(out_n, rng);
    std::vector<double> gis(in.size()), gio(in.size());
    const double tbs = time_ms(iters, [&] {
      kernels::serial::conv2d_backward_input(g.data(), w.data(), gis.data(), s);
    });
    const double tbo = time_ms(iters, [&] {
      kernels::omp::conv2d_backward_input(g.data(), w.data(), gio.data(), s);
    });
    report("conv2d_backward_input", tbs, tbo, bit_equal(gis, gio));

    std::vector<double> gws(w.size()), gbs(b.size()), gwo(w.size()), gbo(b.size());
    const double tps = time_ms(iters, [&] {
      kernels::serial::conv2d_backward_params(g.data(), in.data(), gws.data(), gbs.data(), s);
    });
    const double tpo = time_ms(iters, [&] {
      kernels::omp::conv2d_backward_params(g.data(), in.data(), gwo.data(), gbo.data(), s);
    });
    report("conv2d_backward_params", tps, tpo, bit_equal(gws, gwo) && bit_equal(gbs, gbo));
  }

  {
    const int n = 16, f = 2048, o = 128;
    const auto in = random_vec(static_cast<std::size_t>(n) * f, rng);
    const auto w = random_vec(static_cast<std::size_t>(o) * f, rng);
    const auto b = random_vec(o, rng);
    std::vector<double> outs(static_cast<std::size_t>(n) * o), outo(outs.size());
    const double ts = time_ms(iters, [&] {
      kernels::serial::fc_forward(in.data(), w.data(), b.data(), outs.data(), n, f, o);
    });
    const double to = time_ms(iters, [&] {
      kernels::omp::fc_forward(in.data(), w.data(), b.data(), outo.data(), n, f, o);
    });
    report("fc_forward 2048->128", ts, to, bit_equal(outs, outo));
  }

  {
    const int n = 512, d = 128;
    const auto x = random_vec(static_cast<std::size_t>(n) * d, rng);
    std::vector<double> d_ser(static_cast<std::size_t>(n) * n), d_omp(d_ser.size());
    const double ts = time_ms(
        iters, [&] { kernels::serial::pairwise_distances(x.data(), d_ser.data(), n, d); });
    const double to = time_ms(
        iters, [&] { kernels::omp::pairwise_distances(x.data(), d_omp.data(), n, d); });
    report("pairwise_distances 512", ts, to, bit_equal(d_ser, d_omp));
  }

  return 0;
}
