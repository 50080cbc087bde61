#include "pairview/numerics.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>

#include "pairview/errors.hpp"
#include "pairview/rng.hpp"

namespace pairview::num {

SvdResult svd(const Matrix& m) {
  if (!m.allFinite()) throw NumericError("svd: input contains non-finite entries");
  Eigen::JacobiSVD<Matrix> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdResult r;
  r.u = dec.matrixU();
  r.s = dec.singularValues();
  Matrix v = dec.matrixV();
  // Sign convention: largest-magnitude entry of each left singular vector > 0.
  for (Eigen::Index j = 0; j < r.u.cols(); ++j) {
    Eigen::Index imax = 0;
    r.u.col(j).cwiseAbs().maxCoeff(&imax);
    if (r.u(imax, j) < 0) {
      r.u.col(j) = -r.u.col(j);
      v.col(j) = -v.col(j);
    }
  }
  r.vt = v.transpose();
  return r;
}

Matrix orthonormalize_columns(const Matrix& m) {
  if (m.cols() == 0) throw ArgumentError("orthonormalize_columns: empty matrix");
  Matrix q = m;
  const double scale = m.colwise().norm().maxCoeff();
  const double tol = 1e-10 * (scale > 0 ? scale : 1.0);
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
    }
    const double nrm = q.col(j).norm();
    if (nrm < tol) {
      throw NumericError("orthonormalize_columns: rank-deficient input at column " +
                         std::to_string(j));
    }
    q.col(j) /= nrm;
  }
  return q;
}

namespace {

double sq_dist(const Matrix& pts, Eigen::Index i, const Matrix& centers, Eigen::Index c) {
  return (pts.row(i) - centers.row(c)).squaredNorm();
}

}  // namespace

KmeansResult kmeans(const Matrix& points, int k, std::uint64_t seed) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  if (k < 1 || static_cast<Eigen::Index>(k) > n)
    throw ArgumentError("kmeans: k must be in [1, n]");
  if (!points.allFinite()) throw NumericError("kmeans: non-finite input");

  Rng rng(seed);
  Matrix centers(k, d);

  // k-means++ seeding.
  centers.row(0) = points.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
  Vector dist2(n);
  for (Eigen::Index i = 0; i < n; ++i) dist2(i) = sq_dist(points, i, centers, 0);
  for (int c = 1; c < k; ++c) {
    const double total = dist2.sum();
    Eigen::Index chosen = 0;
    if (total <= 0) {
      chosen = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
    } else {
      const double target = rng.uniform01() * total;
      double acc = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += dist2(i);
        if (acc >= target) {
          chosen = i;
          break;
        }
      }
    }
    centers.row(c) = points.row(chosen);
    for (Eigen::Index i = 0; i < n; ++i)
      dist2(i) = std::min(dist2(i), sq_dist(points, i, centers, c));
  }

  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  std::vector<double> trace;

  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    double step_inertia = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double bestd = sq_dist(points, i, centers, 0);
      for (int c = 1; c < k; ++c) {
        const double dd = sq_dist(points, i, centers, c);
        if (dd < bestd) {
          bestd = dd;
          best = c;
        }
      }
      step_inertia += bestd;
      if (labels[static_cast<std::size_t>(i)] != best) {
        labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    trace.push_back(step_inertia);
    if (!changed && iter > 0) break;

    std::fill(counts.begin(), counts.end(), 0);
    Matrix sums = Matrix::Zero(k, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = labels[static_cast<std::size_t>(i)];
      sums.row(c) += points.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
      } else {
        // Re-seed to the point farthest from its own center.
        Eigen::Index far = 0;
        double fard = -1;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double dd = sq_dist(points, i, centers, labels[static_cast<std::size_t>(i)]);
          if (dd > fard) {
            fard = dd;
            far = i;
          }
        }
        centers.row(c) = points.row(far);
        labels[static_cast<std::size_t>(far)] = c;
      }
    }
  }

  double inertia = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    inertia += sq_dist(points, i, centers, labels[static_cast<std::size_t>(i)]);

  return KmeansResult{std::move(labels), std::move(centers), inertia, std::move(trace)};
}

}  // namespace pairview::num
