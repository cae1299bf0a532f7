#include "herdmetric/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "herdmetric/error.hpp"

namespace herdmetric {

double euclidean_distance(const Vec& a, const Vec& b) {
  if (a.size() != b.size())
    throw DimensionError("euclidean_distance: length mismatch (" +
                         std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  // Same four-lane accumulation as kernels::pairwise_distances, so the two
  // routes agree bit-for-bit.
  const std::size_t n = a.size();
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double d0 = a[i] - b[i];
    const double d1 = a[i + 1] - b[i + 1];
    const double d2 = a[i + 2] - b[i + 2];
    const double d3 = a[i + 3] - b[i + 3];
    acc0 += d0 * d0;
    acc1 += d1 * d1;
    acc2 += d2 * d2;
    acc3 += d3 * d3;
  }
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    acc0 += d * d;
  }
  return std::sqrt((acc0 + acc1) + (acc2 + acc3));
}

Vec softmax(const Vec& logits) {
  if (logits.empty()) throw DimensionError("softmax: empty input");
  const double m = *std::max_element(logits.begin(), logits.end());
  Vec out(logits.size());
  double denom = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    denom += out[i];
  }
  for (double& v : out) v /= denom;
  return out;
}

namespace detail {

// Cyclic Jacobi on a dense symmetric matrix (row-major, overwritten).
// Good enough for the 128x128 covariance this project needs.
void jacobi_eigen_sym(std::vector<double>& a, std::size_t n,
                      std::vector<double>& eigenvalues,
                      std::vector<double>& eigenvectors) {
  eigenvectors.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) eigenvectors[i * n + i] = 1.0;

  auto off_norm = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += a[i * n + j] * a[i * n + j];
    return s;
  };
  double diag_scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) diag_scale += a[i * n + i] * a[i * n + i];
  const double tol = 1e-24 * std::max(1.0, diag_scale);

  for (int sweep = 0; sweep < 128 && off_norm() > tol; ++sweep) {
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        const double app = a[p * n + p];
        const double aqq = a[q * n + q];
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = eigenvectors[k * n + p];
          const double vkq = eigenvectors[k * n + q];
          eigenvectors[k * n + p] = c * vkp - s * vkq;
          eigenvectors[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }

  eigenvalues.resize(n);
  for (std::size_t i = 0; i < n; ++i) eigenvalues[i] = a[i * n + i];

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return eigenvalues[x] > eigenvalues[y]; });

  std::vector<double> ev(n), vv(n * n);
  for (std::size_t c = 0; c < n; ++c) {
    ev[c] = eigenvalues[order[c]];
    for (std::size_t r = 0; r < n; ++r) vv[r * n + c] = eigenvectors[r * n + order[c]];
  }
  eigenvalues.swap(ev);
  eigenvectors.swap(vv);
}

}  // namespace detail

std::vector<std::pair<double, double>> pca_project_2d(const std::vector<Vec>& points) {
  if (points.size() < 2) throw DimensionError("pca_project_2d: need at least 2 points");
  const std::size_t d = points[0].size();
  for (const Vec& p : points)
    if (p.size() != d) throw DimensionError("pca_project_2d: ragged point set");
  if (d == 0) throw DimensionError("pca_project_2d: zero-dimensional points");

  const std::size_t m = points.size();
  Vec mean(d, 0.0);
  for (const Vec& p : points)
    for (std::size_t j = 0; j < d; ++j) mean[j] += p[j];
  for (double& v : mean) v /= static_cast<double>(m);

  std::vector<double> cov(d * d, 0.0);
  for (const Vec& p : points) {
    for (std::size_t i = 0; i < d; ++i) {
      const double ci = p[i] - mean[i];
      for (std::size_t j = i; j < d; ++j) cov[i * d + j] += ci * (p[j] - mean[j]);
    }
  }
  const double norm = 1.0 / static_cast<double>(m - 1);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      cov[i * d + j] *= norm;
      cov[j * d + i] = cov[i * d + j];
    }

  std::vector<double> eigenvalues, eigenvectors;
  detail::jacobi_eigen_sym(cov, d, eigenvalues, eigenvectors);

  // Two leading components; if d == 1 the second axis is identically zero.
  Vec axis0(d, 0.0), axis1(d, 0.0);
  for (std::size_t r = 0; r < d; ++r) {
    axis0[r] = eigenvectors[r * d + 0];
    if (d > 1) axis1[r] = eigenvectors[r * d + 1];
  }
  auto fix_sign = [](Vec& v) {
    for (double x : v) {
      if (std::abs(x) > 1e-12) {
        if (x < 0)
          for (double& y : v) y = -y;
        return;
      }
    }
  };
  fix_sign(axis0);
  fix_sign(axis1);

  std::vector<std::pair<double, double>> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    double x = 0.0, y = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = points[i][j] - mean[j];
      x += c * axis0[j];
      y += c * axis1[j];
    }
    out[i] = {x, y};
  }
  return out;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::data:
    case ErrorKind::parse:
      return 3;
    case ErrorKind::instability:
      return 4;
    default:
      return 2;
  }
}

}  // namespace herdmetric
