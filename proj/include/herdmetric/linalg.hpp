#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace herdmetric {

using Vec = std::vector<double>;

// Plain Euclidean distance; the single metric used by losses, mining and kNN.
double euclidean_distance(const Vec& a, const Vec& b);

// Max-stabilized softmax; entries sum to 1.
Vec softmax(const Vec& logits);

// Projects a point set onto its top-2 principal components (mean-centered,
// covariance eigendecomposition via cyclic Jacobi). Sign convention: the first
// loading of each component with |value| > 1e-12 is made positive, so the
// output is deterministic given input order.
std::vector<std::pair<double, double>> pca_project_2d(const std::vector<Vec>& points);

namespace detail {
// Symmetric eigendecomposition, eigenvalues descending. Exposed for tests.
void jacobi_eigen_sym(std::vector<double>& a, std::size_t n,
                      std::vector<double>& eigenvalues,
                      std::vector<double>& eigenvectors);
}  // namespace detail

}  // namespace herdmetric
