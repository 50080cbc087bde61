#include "pairview/srrr.hpp"

#include <Eigen/QR>
#include <cmath>

#include "pairview/errors.hpp"
#include "pairview/numerics.hpp"

namespace pairview::srrr {

namespace {

std::vector<int> nonzero_rows(const Matrix& w) {
  std::vector<int> out;
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    if (w.row(i).norm() > 0) out.push_back(static_cast<int>(i));
  return out;
}

// Worst-row subgradient violation of the group-lasso stationarity conditions.
double kkt_residual_of(const Matrix& x, const Matrix& yv, const Matrix& w, double lambda,
                       double ridge) {
  const double n = static_cast<double>(x.rows());
  const Matrix r = yv - x * w;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    const Vector c = 2.0 * (x.col(i).transpose() * r).transpose() / n;
    const double wn = w.row(i).norm();
    if (wn > 0) {
      const Vector g = c - lambda * w.row(i).transpose() / wn - 2.0 * ridge * w.row(i).transpose() / n;
      worst = std::max(worst, g.norm());
    } else {
      worst = std::max(worst, std::max(0.0, c.norm() - lambda));
    }
  }
  return worst;
}

}  // namespace

double data_loss(const Matrix& x, const Matrix& y, const RrrModel& m) {
  return (y - m.predict(x)).squaredNorm() / static_cast<double>(x.rows());
}

double penalized_loss(const Matrix& x, const Matrix& y, const RrrModel& m) {
  double pen = 0;
  for (Eigen::Index i = 0; i < m.w.rows(); ++i) pen += m.w.row(i).norm();
  return data_loss(x, y, m) + m.lambda * pen +
         m.ridge * m.w.squaredNorm() / static_cast<double>(x.rows());
}

RrrModel fit_rrr(const Matrix& x, const Matrix& y, int rank, double ridge) {
  const Eigen::Index n = x.rows(), p = x.cols(), q = y.cols();
  if (n < 2) throw ArgumentError("fit_rrr: need n > 1");
  if (y.rows() != n) throw ArgumentError("fit_rrr: row count mismatch");
  if (rank < 1 || rank > std::min(p, q))
    throw ArgumentError("fit_rrr: rank must be in [1, min(p, q)]");
  if (ridge < 0) throw ArgumentError("fit_rrr: ridge must be >= 0");

  Matrix b;  // p x q
  if (ridge == 0.0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(x);
    if (qr.rank() < p)
      throw NumericError("fit_rrr: X^T X is singular; use ridge > 0");
    b = qr.solve(y);
  } else {
    Matrix xtx = x.transpose() * x;
    xtx.diagonal().array() += ridge;
    b = xtx.llt().solve(x.transpose() * y);
  }

  const Matrix fitted = x * b;
  const num::SvdResult sv = num::svd(fitted);
  RrrModel m;
  m.rank = rank;
  m.ridge = ridge;
  m.v = sv.vt.topRows(rank).transpose();  // q x r
  m.w = b * m.v;                          // p x r
  m.selected = nonzero_rows(m.w);
  return m;
}

Matrix procrustes_step(const Matrix& x, const Matrix& y, const Matrix& w) {
  const Matrix m = y.transpose() * (x * w);  // q x r
  const num::SvdResult sv = num::svd(m);
  const double smax = sv.s.size() ? sv.s(0) : 0.0;
  if (smax <= 0 || sv.s(sv.s.size() - 1) < 1e-12 * smax)
    throw NumericError("procrustes_step: Y^T X W is rank-deficient");
  return sv.u * sv.vt;  // q x r, orthonormal columns
}

double lambda_max(const Matrix& x, const Matrix& yv) {
  const double n = static_cast<double>(x.rows());
  double best = 0;
  for (Eigen::Index i = 0; i < x.cols(); ++i)
    best = std::max(best, 2.0 * (x.col(i).transpose() * yv).norm() / n);
  return best;
}

Matrix encoder_step(const Matrix& x, const Matrix& yv, double lambda, double ridge,
                    const Matrix& w_init, EncoderDiag* diag) {
  const Eigen::Index p = x.cols();
  const double n = static_cast<double>(x.rows());
  if (lambda < 0 || ridge < 0) throw ArgumentError("encoder_step: negative penalty");
  if (w_init.rows() != p || w_init.cols() != yv.cols())
    throw ArgumentError("encoder_step: w_init shape mismatch");

  Vector gram_diag(p);
  for (Eigen::Index i = 0; i < p; ++i) gram_diag(i) = x.col(i).squaredNorm();

  Matrix w = w_init;
  Matrix resid = yv - x * w;  // n x r
  const double zero_thresh = lambda * n / 2.0;

  EncoderDiag d;
  for (d.sweeps = 1; d.sweeps <= 1000; ++d.sweeps) {
    double max_change = 0;
    for (Eigen::Index i = 0; i < p; ++i) {
      const Vector w_old = w.row(i).transpose();
      // c = X_i^T (residual with row i added back)
      Vector c = (x.col(i).transpose() * resid).transpose();
      if (w_old.squaredNorm() > 0) c += gram_diag(i) * w_old;
      const double cn = c.norm();
      Vector w_new;
      if (cn <= zero_thresh) {
        w_new = Vector::Zero(w.cols());
      } else {
        w_new = ((cn - zero_thresh) / (gram_diag(i) + ridge)) * (c / cn);
      }
      const Vector delta = w_new - w_old;
      const double change = delta.norm();
      if (change > 0) {
        resid -= x.col(i) * delta.transpose();
        w.row(i) = w_new.transpose();
      }
      max_change = std::max(max_change, change);
    }
    d.final_change = max_change;
    if (max_change < 1e-7) {
      d.converged = true;
      if (diag) *diag = d;
      return w;
    }
  }
  d.converged = false;
  d.sweeps = 1000;
  if (diag) *diag = d;
  return w;
}

RrrModel fit_srrr(const Matrix& x, const Matrix& y, int rank, double lambda, double ridge,
                  int max_alt, const RrrModel* warm_start) {
  if (lambda < 0) throw ArgumentError("fit_srrr: lambda must be >= 0");

  RrrModel m;
  if (warm_start && warm_start->rank == rank && warm_start->w.rows() == x.cols()) {
    m = *warm_start;
  } else {
    try {
      m = fit_rrr(x, y, rank, ridge);
    } catch (const NumericError&) {
      m = fit_rrr(x, y, rank, 1e-6);
    }
  }
  m.lambda = lambda;
  m.ridge = ridge;

  bool encoder_converged = true;
  double prev_loss = penalized_loss(x, y, m);
  int it = 0;
  for (it = 1; it <= max_alt; ++it) {
    EncoderDiag diag;
    m.w = encoder_step(x, y * m.v, lambda, ridge, m.w, &diag);
    encoder_converged = encoder_converged && diag.converged;
    if (m.w.norm() == 0) break;  // fully shrunk; V is immaterial
    m.v = procrustes_step(x, y, m.w);

    const double loss = penalized_loss(x, y, m);
    if (loss > prev_loss + 1e-10)
      throw NumericError("fit_srrr: penalized loss increased (solver fault)");
    const double rel = std::abs(prev_loss - loss) / std::max(prev_loss, 1e-12);
    prev_loss = loss;
    if (rel < 1e-6) break;
  }

  // The loop ends right after a decoder update, leaving the encoder one step
  // stale for the final V. Polish until the fixed-V stationarity holds.
  if (m.w.norm() > 0) {
    for (int polish = 0; polish < 20; ++polish) {
      if (kkt_residual_of(x, y * m.v, m.w, lambda, ridge) < 1e-5) break;
      EncoderDiag diag;
      m.w = encoder_step(x, y * m.v, lambda, ridge, m.w, &diag);
      encoder_converged = encoder_converged && diag.converged;
      if (m.w.norm() == 0) break;
      m.v = procrustes_step(x, y, m.w);
    }
    if (m.w.norm() > 0) {
      EncoderDiag diag;
      m.w = encoder_step(x, y * m.v, lambda, ridge, m.w, &diag);
      encoder_converged = encoder_converged && diag.converged;
    }
  }

  m.alt_iterations = std::min(it, max_alt);
  m.selected = nonzero_rows(m.w);
  m.converged = encoder_converged;
  m.kkt_residual = kkt_residual_of(x, y * m.v, m.w, lambda, ridge);
  return m;
}

RrrModel relaxed_refit(const Matrix& x, const Matrix& y, const RrrModel& model) {
  if (model.selected.empty()) throw ArgumentError("relaxed_refit: empty selection");
  Matrix xs(x.rows(), static_cast<Eigen::Index>(model.selected.size()));
  for (std::size_t j = 0; j < model.selected.size(); ++j)
    xs.col(static_cast<Eigen::Index>(j)) = x.col(model.selected[j]);

  RrrModel sub = fit_rrr(xs, y, model.rank, model.lambda);

  RrrModel out;
  out.rank = model.rank;
  out.lambda = model.lambda;
  out.ridge = model.lambda;
  out.v = sub.v;
  out.w = Matrix::Zero(x.cols(), model.rank);
  for (std::size_t j = 0; j < model.selected.size(); ++j)
    out.w.row(model.selected[j]) = sub.w.row(static_cast<Eigen::Index>(j));
  out.selected = nonzero_rows(out.w);
  out.inexact_target = model.inexact_target;
  return out;
}

std::pair<double, RrrModel> regularization_path(const Matrix& x, const Matrix& y, int rank,
                                                int target_genes) {
  const Eigen::Index p = x.cols();
  if (target_genes < 1 || target_genes > p)
    throw ArgumentError("regularization_path: target_genes must be in [1, p]");

  RrrModel init;
  try {
    init = fit_rrr(x, y, rank, 0.0);
  } catch (const NumericError&) {
    init = fit_rrr(x, y, rank, 1e-6);
  }
  const double lmax = lambda_max(x, y * init.v);
  const double lmin = lmax * 1e-4;

  RrrModel warm = init;
  auto fit_at = [&](double lam) {
    RrrModel m = fit_srrr(x, y, rank, lam, 0.0, 100, &warm);
    if (!m.selected.empty()) warm = m;
    return m;
  };

  double lo = std::log(lmin), hi = std::log(lmax);
  double best_lambda = lmin;
  RrrModel best;
  int best_gap = -1;

  auto consider = [&](double lam, const RrrModel& m) {
    const int count = static_cast<int>(m.selected.size());
    const int gap = std::abs(count - target_genes);
    // Ties prefer the smaller lambda (more genes).
    if (best_gap < 0 || gap < best_gap || (gap == best_gap && lam < best_lambda)) {
      best_gap = gap;
      best_lambda = lam;
      best = m;
    }
    return count;
  };

  {
    RrrModel m = fit_at(std::exp(lo));
    if (consider(std::exp(lo), m) == target_genes) return {std::exp(lo), best};
  }
  for (int step = 0; step < 60; ++step) {
    const double mid = 0.5 * (lo + hi);
    RrrModel m = fit_at(std::exp(mid));
    const int count = consider(std::exp(mid), m);
    if (count == target_genes) return {std::exp(mid), best};
    if (count > target_genes) {
      lo = mid;  // too many genes: increase lambda
    } else {
      hi = mid;
    }
  }
  best.inexact_target = true;
  return {best_lambda, best};
}

json model_to_json(const RrrModel& m) {
  json j;
  j["kind"] = "rrr";
  j["rank"] = m.rank;
  j["lambda"] = m.lambda;
  j["ridge"] = m.ridge;
  j["w"] = matrix_to_json(m.w);
  j["v"] = matrix_to_json(m.v);
  j["selected"] = m.selected;
  j["diagnostics"] = {{"alt_iterations", m.alt_iterations},
                      {"kkt_residual", m.kkt_residual},
                      {"converged", m.converged},
                      {"inexact_target", m.inexact_target}};
  return j;
}

RrrModel model_from_json(const json& j) {
  RrrModel m;
  m.rank = j.at("rank").get<int>();
  m.lambda = j.at("lambda").get<double>();
  m.ridge = j.at("ridge").get<double>();
  m.w = matrix_from_json(j.at("w"));
  m.v = matrix_from_json(j.at("v"));
  m.selected = j.at("selected").get<std::vector<int>>();
  if (j.contains("diagnostics")) {
    const auto& d = j.at("diagnostics");
    m.alt_iterations = d.at("alt_iterations").get<int>();
    m.kkt_residual = d.at("kkt_residual").get<double>();
    m.converged = d.at("converged").get<bool>();
    m.inexact_target = d.at("inexact_target").get<bool>();
  }
  return m;
}

}  // namespace pairview::srrr
