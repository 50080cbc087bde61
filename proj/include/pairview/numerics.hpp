#pragma once

#include <cstdint>
#include <vector>

#include "pairview/types.hpp"

namespace pairview::num {

struct SvdResult {
  Matrix u;   // n x k, orthonormal columns
  Vector s;   // k singular values, descending
  Matrix vt;  // k x p, orthonormal rows
};

// Thin SVD with a deterministic sign convention: the largest-magnitude entry
// of each left singular vector is positive. Throws NumericError on non-finite
// input.
SvdResult svd(const Matrix& m);

// Modified Gram-Schmidt. Result Q spans the same columns and satisfies
// Q^T Q = I within 1e-10. Throws NumericError on rank-deficient input.
Matrix orthonormalize_columns(const Matrix& m);

struct KmeansResult {
  std::vector<int> labels;
  Matrix centers;  // k x d
  double inertia;
  std::vector<double> inertia_trace;  // inertia after each assignment step
};

// k-means++ seeding, Lloyd iterations until the assignment reaches a fixpoint
// or 300 iterations. Empty clusters are re-seeded to the point farthest from
// its current center. Deterministic given the seed.
KmeansResult kmeans(const Matrix& points, int k, std::uint64_t seed);

}  // namespace pairview::num
