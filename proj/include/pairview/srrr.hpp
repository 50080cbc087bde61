#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pairview/types.hpp"

namespace pairview::srrr {

// Rank-constrained linear model Y ~ X W V^T with orthonormal decoder columns.
// Rows of W outside `selected` are stored as exact zeros.
struct RrrModel {
  Matrix w;  // p x r encoder
  Matrix v;  // q x r decoder, v^T v = I
  int rank = 0;
  double lambda = 0.0;
  double ridge = 0.0;
  std::vector<int> selected;

  // solver diagnostics
  int alt_iterations = 0;
  double kkt_residual = 0.0;
  bool converged = true;
  bool inexact_target = false;

  Matrix predict(const Matrix& x) const { return x * w * v.transpose(); }
};

json model_to_json(const RrrModel& m);
RrrModel model_from_json(const json& j);

// Squared-error data fit divided by n: ||Y - X W V^T||^2 / n.
double data_loss(const Matrix& x, const Matrix& y, const RrrModel& m);

// Full penalized objective: data_loss + lambda * sum_i ||W_i.|| + ridge*||W||^2/n.
double penalized_loss(const Matrix& x, const Matrix& y, const RrrModel& m);

// Closed-form (ridge-)RRR: B = (X^T X + ridge I)^-1 X^T Y, V = top-r right
// singular vectors of X B, W = B V.
RrrModel fit_rrr(const Matrix& x, const Matrix& y, int rank, double ridge = 0.0);

// Orthogonal Procrustes: the orthonormal-column V minimizing ||Y - X W V^T||^2,
// i.e. the polar factor of Y^T (X W).
Matrix procrustes_step(const Matrix& x, const Matrix& y, const Matrix& w);

struct EncoderDiag {
  bool converged = true;
  int sweeps = 0;
  double final_change = 0.0;
};

// Block coordinate descent over rows of W for the objective
//   ||YV - XW||^2/n + lambda * sum_i ||W_i.||_2 + ridge * ||W||^2/n.
// Rows are set exactly to zero by the group soft-threshold.
Matrix encoder_step(const Matrix& x, const Matrix& yv, double lambda, double ridge,
                    const Matrix& w_init, EncoderDiag* diag = nullptr);

// Smallest lambda for which the encoder solution is all-zero:
// max_i 2 ||X_i^T (YV)|| / n.
double lambda_max(const Matrix& x, const Matrix& yv);

// Alternating group-lasso / Procrustes solver. Penalized loss is
// non-increasing across iterations; an increase beyond 1e-10 is a solver
// fault.
RrrModel fit_srrr(const Matrix& x, const Matrix& y, int rank, double lambda,
                  double ridge = 0.0, int max_alt = 100,
                  const RrrModel* warm_start = nullptr);

// Ridge-only refit on the selected columns, ridge strength = model.lambda.
// Unselected rows stay exactly zero.
RrrModel relaxed_refit(const Matrix& x, const Matrix& y, const RrrModel& model);

// Bisection on log-lambda until the selected count hits target_genes, or the
// closest achievable count with model.inexact_target set.
std::pair<double, RrrModel> regularization_path(const Matrix& x, const Matrix& y, int rank,
                                                int target_genes);

}  // namespace pairview::srrr
