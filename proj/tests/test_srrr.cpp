#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "pairview/errors.hpp"
#include "pairview/numerics.hpp"
#include "pairview/rng.hpp"
#include "pairview/srrr.hpp"

using namespace pairview;

namespace {

Matrix random_matrix(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) m(i, j) = rng.normal();
  return m;
}

// Planted low-rank problem with optional noise, centered columns.
std::pair<Matrix, Matrix> planted(int n, int p, int q, int rank, double noise,
                                  std::uint64_t seed) {
  Rng rng(seed);
  Matrix x = random_matrix(n, p, rng.next_u64());
  Matrix w = random_matrix(p, rank, rng.next_u64());
  Matrix v = num::orthonormalize_columns(random_matrix(q, rank, rng.next_u64()));
  Matrix y = x * w * v.transpose();
  if (noise > 0) y += noise * random_matrix(n, q, rng.next_u64());
  x.rowwise() -= x.colwise().mean();
  y.rowwise() -= y.colwise().mean();
  return {x, y};
}

// KKT residual checked directly from the subgradient conditions of
// ||YV - XW||^2/n + lambda * sum_i ||W_i.||.
void check_kkt(const Matrix& x, const Matrix& y, const srrr::RrrModel& m) {
  const Matrix r = y * m.v - x * m.w;
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index i = 0; i < m.w.rows(); ++i) {
    const Vector g = 2.0 * x.col(i).transpose() * r / n;
    const double row_norm = m.w.row(i).norm();
    if (row_norm > 0) {
      const Vector stat = g - m.lambda * m.w.row(i).transpose() / row_norm;
      CHECK(stat.norm() < 1e-5);
    } else {
      CHECK(g.norm() <= m.lambda * (1.0 + 1e-6));
    }
  }
}

}  // namespace

TEST_CASE("fit_rrr matches the truncated-SVD oracle when X is orthonormal") {
  // With X^T X = I the rank-r RRR of Y on X is the rank-r truncation of X^T Y
  // projected back, so the fit error equals the sum of discarded singular
  // values squared (Eckart-Young).
  const int n = 30, q = 6, r = 2;
  Matrix x = num::orthonormalize_columns(random_matrix(n, 8, 3));
  Matrix y = random_matrix(n, q, 4);
  // Make Y exactly representable through X so the oracle is clean.
  y = x * (x.transpose() * y);
  const auto model = srrr::fit_rrr(x, y, r, 0.0);
  const auto svd = num::svd(x.transpose() * y);
  double discarded = 0;
  for (Eigen::Index i = r; i < svd.s.size(); ++i) discarded += svd.s(i) * svd.s(i);
  const double loss = (y - model.predict(x)).squaredNorm();
  CHECK(loss == doctest::Approx(discarded).epsilon(1e-9));
  CHECK((model.v.transpose() * model.v - Matrix::Identity(r, r)).norm() < 1e-10);
}

TEST_CASE("fit_rrr full rank with no noise reaches zero loss") {
  auto [x, y] = planted(40, 6, 5, 5, 0.0, 10);
  const auto model = srrr::fit_rrr(x, y, 5, 0.0);
  CHECK(srrr::data_loss(x, y, model) < 1e-18);
}

TEST_CASE("fit_rrr demands ridge on singular designs") {
  Matrix x = random_matrix(20, 4, 6);
  x.col(3) = x.col(0);
  Matrix y = random_matrix(20, 3, 7);
  x.rowwise() -= x.colwise().mean();
  y.rowwise() -= y.colwise().mean();
  CHECK_THROWS_AS(srrr::fit_rrr(x, y, 2, 0.0), NumericError);
  CHECK_NOTHROW(srrr::fit_rrr(x, y, 2, 1e-6));
}

TEST_CASE("procrustes_step beats random orthonormal decoders") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    auto [x, y] = planted(25, 6, 5, 3, 0.5, seed);
    const Matrix w = random_matrix(6, 3, seed + 100);
    const Matrix v = srrr::procrustes_step(x, y, w);
    CHECK((v.transpose() * v - Matrix::Identity(3, 3)).norm() < 1e-10);
    const double best = (y - x * w * v.transpose()).squaredNorm();
    Rng rng(seed + 200);
    for (int t = 0; t < 50; ++t) {
      const Matrix cand = num::orthonormalize_columns(random_matrix(5, 3, rng.next_u64()));
      CHECK(best <= (y - x * w * cand.transpose()).squaredNorm() + 1e-9);
    }
  }
}

TEST_CASE("encoder_step with lambda 0 solves the normal equations") {
  auto [x, y] = planted(50, 5, 4, 2, 0.3, 21);
  const Matrix v = srrr::fit_rrr(x, y, 2, 0.0).v;
  const Matrix yv = y * v;
  const Matrix w = srrr::encoder_step(x, yv, 0.0, 0.0, Matrix::Zero(5, 2));
  const Matrix ols = (x.transpose() * x).llt().solve(x.transpose() * yv);
  CHECK((w - ols).norm() < 1e-6 * std::max(1.0, ols.norm()));
}

TEST_CASE("lambda_max is the zeroing threshold") {
  auto [x, y] = planted(40, 6, 4, 2, 0.2, 33);
  const Matrix v = srrr::fit_rrr(x, y, 2, 0.0).v;
  const Matrix yv = y * v;
  const double lmax = srrr::lambda_max(x, yv);
  const Matrix at = srrr::encoder_step(x, yv, lmax * (1 + 1e-9), 0.0, Matrix::Zero(6, 2));
  CHECK(at.norm() == 0.0);
  const Matrix below = srrr::encoder_step(x, yv, lmax * 0.9, 0.0, Matrix::Zero(6, 2));
  CHECK(below.norm() > 0.0);
}

TEST_CASE("fit_srrr satisfies KKT and selects a sparse support") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto [x, y] = planted(60, 10, 5, 2, 0.3, 40 + seed);
    const Matrix v0 = srrr::fit_rrr(x, y, 2, 0.0).v;
    const double lambda = 0.3 * srrr::lambda_max(x, y * v0);
    const auto model = srrr::fit_srrr(x, y, 2, lambda);
    CHECK(model.converged);
    check_kkt(x, y, model);
    CHECK(static_cast<int>(model.selected.size()) <= 10);
    // selected mirrors the nonzero rows exactly
    for (Eigen::Index i = 0; i < 10; ++i) {
      const bool in = std::find(model.selected.begin(), model.selected.end(),
                                static_cast<int>(i)) != model.selected.end();
      CHECK(in == (model.w.row(i).norm() > 0));
    }
  }
}

TEST_CASE("fit_srrr with lambda 0 reproduces closed-form RRR loss") {
  auto [x, y] = planted(50, 7, 5, 3, 0.4, 55);
  const auto exact = srrr::fit_rrr(x, y, 3, 0.0);
  const auto alt = srrr::fit_srrr(x, y, 3, 0.0);
  CHECK(srrr::data_loss(x, y, alt) ==
        doctest::Approx(srrr::data_loss(x, y, exact)).epsilon(1e-6));
}

TEST_CASE("relaxed_refit keeps zero rows and does not hurt training fit") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto [x, y] = planted(60, 12, 4, 2, 0.3, 70 + seed);
    const Matrix v0 = srrr::fit_rrr(x, y, 2, 0.0).v;
    const double lambda = 0.4 * srrr::lambda_max(x, y * v0);
    const auto shrunken = srrr::fit_srrr(x, y, 2, lambda);
    if (shrunken.selected.empty()) continue;
    const auto relaxed = srrr::relaxed_refit(x, y, shrunken);
    CHECK(relaxed.selected == shrunken.selected);
    for (Eigen::Index i = 0; i < 12; ++i) {
      if (shrunken.w.row(i).norm() == 0) CHECK(relaxed.w.row(i).norm() == 0.0);
    }
    CHECK(srrr::data_loss(x, y, relaxed) <= srrr::data_loss(x, y, shrunken) + 1e-10);
  }
}

TEST_CASE("regularization_path hits the target support size") {
  auto [x, y] = planted(80, 20, 4, 2, 0.3, 91);
  const auto [lambda, model] = srrr::regularization_path(x, y, 2, 6);
  CHECK(lambda > 0);
  if (!model.inexact_target) CHECK(static_cast<int>(model.selected.size()) == 6);
  CHECK(static_cast<int>(model.selected.size()) >= 1);
}

TEST_CASE("regularization_path recovers a planted sparse support") {
  // Only the first 4 predictors drive Y.
  Rng rng(123);
  Matrix x = random_matrix(300, 15, rng.next_u64());
  Matrix w = Matrix::Zero(15, 2);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 2; ++j) w(i, j) = rng.normal();
  const Matrix v = num::orthonormalize_columns(random_matrix(5, 2, rng.next_u64()));
  Matrix y = x * w * v.transpose() + 0.1 * random_matrix(300, 5, rng.next_u64());
  x.rowwise() -= x.colwise().mean();
  y.rowwise() -= y.colwise().mean();
  const auto [lambda, model] = srrr::regularization_path(x, y, 2, 4);
  CHECK(model.selected == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("model json round trip preserves predictions") {
  auto [x, y] = planted(30, 8, 4, 2, 0.3, 140);
  const Matrix v0 = srrr::fit_rrr(x, y, 2, 0.0).v;
  const auto model = srrr::fit_srrr(x, y, 2, 0.2 * srrr::lambda_max(x, y * v0));
  const auto back = srrr::model_from_json(srrr::model_to_json(model));
  CHECK(back.w == model.w);
  CHECK(back.v == model.v);
  CHECK(back.selected == model.selected);
  CHECK(back.lambda == model.lambda);
}
