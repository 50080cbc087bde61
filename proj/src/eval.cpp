#include "pairview/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include "pairview/errors.hpp"
#include "pairview/rng.hpp"
#include "pairview/srrr.hpp"

namespace pairview::eval {

double r2_multivariate(const Matrix& y_test, const Matrix& y_pred, const Vector& train_means) {
  if (y_test.rows() != y_pred.rows() || y_test.cols() != y_pred.cols())
    throw ArgumentError("r2_multivariate: shape mismatch");
  if (train_means.size() != y_test.cols())
    throw ArgumentError("r2_multivariate: train_means length mismatch");
  Matrix centered = y_test;
  centered.rowwise() -= train_means.transpose();
  const double denom = centered.squaredNorm();
  if (denom == 0) throw DataError("r2_multivariate: centered test targets have zero norm");
  return 1.0 - (y_test - y_pred).squaredNorm() / denom;
}

Vector r2_per_feature(const Matrix& y_test, const Matrix& y_pred, const Vector& train_means) {
  if (y_test.rows() != y_pred.rows() || y_test.cols() != y_pred.cols())
    throw ArgumentError("r2_per_feature: shape mismatch");
  Vector out(y_test.cols());
  for (Eigen::Index j = 0; j < y_test.cols(); ++j) {
    const double denom = (y_test.col(j).array() - train_means(j)).square().sum();
    if (denom == 0) {
      out(j) = std::numeric_limits<double>::quiet_NaN();  // undefined marker
    } else {
      out(j) = 1.0 - (y_test.col(j) - y_pred.col(j)).squaredNorm() / denom;
    }
  }
  return out;
}

std::vector<int> make_folds(int n, int folds, std::uint64_t seed) {
  if (folds < 2 || folds > n) throw ArgumentError("make_folds: folds must be in [2, n]");
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  Rng rng(Rng::mix(seed, 0xf01d5));
  rng.shuffle(perm);
  std::vector<int> assign(static_cast<std::size_t>(n));
  // First (n mod folds) folds get the extra sample.
  const int base = n / folds, extra = n % folds;
  int pos = 0;
  for (int f = 0; f < folds; ++f) {
    const int size = base + (f < extra ? 1 : 0);
    for (int i = 0; i < size; ++i) assign[static_cast<std::size_t>(perm[static_cast<std::size_t>(pos++)])] = f;
  }
  return assign;
}

VariantSpec make_variant(const std::string& name) {
  VariantSpec v;
  v.name = name;
  if (name == "srrr-2") {
    v.kind = VariantKind::Srrr;
    v.rank = 2;
  } else if (name == "srrr-full") {
    v.kind = VariantKind::Srrr;
    v.rank = 0;
  } else if (name == "sbnn-2") {
    v.kind = VariantKind::Sbnn;
    v.config.bottleneck = 2;
  } else if (name == "sbnn-64") {
    v.kind = VariantKind::Sbnn;
    v.config.bottleneck = 64;
  } else if (name == "oracle") {
    v.kind = VariantKind::Oracle;
  } else {
    throw ArgumentError("unknown model variant: " + name);
  }
  return v;
}

namespace {

Matrix take_rows_by_fold(const Matrix& m, const std::vector<int>& assign, int fold, bool in_fold) {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < assign.size(); ++i)
    if ((assign[i] == fold) == in_fold) rows.push_back(static_cast<Eigen::Index>(i));
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

struct FoldScores {
  Vector r2;       // per variant
  Matrix per_feat;  // variants x q
  std::vector<schedule::TrainHistory> histories;  // per variant
};

FoldScores evaluate_fold(const data::PairedDataset& dataset,
                         const std::vector<VariantSpec>& variants,
                         const std::vector<int>& assign, int fold, std::uint64_t seed,
                         bool paper_compat) {
  Matrix x_train = take_rows_by_fold(dataset.x, assign, fold, false);
  Matrix y_train = take_rows_by_fold(dataset.y, assign, fold, false);
  Matrix x_test = take_rows_by_fold(dataset.x, assign, fold, true);
  Matrix y_test = take_rows_by_fold(dataset.y, assign, fold, true);

  if (!paper_compat) {
    const auto sx = data::zscore_fit(x_train);
    const auto sy = data::zscore_fit(y_train);
    x_train = sx.apply(x_train);
    x_test = sx.apply(x_test);
    y_train = sy.apply(y_train);
    y_test = sy.apply(y_test);
  }
  const Vector x_means = x_train.colwise().mean();
  const Vector y_means = y_train.colwise().mean();

  FoldScores fs;
  fs.r2.resize(static_cast<Eigen::Index>(variants.size()));
  fs.per_feat.resize(static_cast<Eigen::Index>(variants.size()), dataset.q());
  fs.histories.resize(variants.size());

  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    const VariantSpec& v = variants[vi];
    Matrix y_pred;
    if (v.kind == VariantKind::Oracle) {
      y_pred = y_test;
    } else if (v.kind == VariantKind::Srrr) {
      Matrix xc = x_train;
      xc.rowwise() -= x_means.transpose();
      Matrix yc = y_train;
      yc.rowwise() -= y_means.transpose();
      const int rank = v.rank > 0 ? v.rank : static_cast<int>(dataset.q());
      auto [lambda, model] = srrr::regularization_path(xc, yc, rank, v.target_genes);
      srrr::RrrModel relaxed = srrr::relaxed_refit(xc, yc, model);
      Matrix xtc = x_test;
      xtc.rowwise() -= x_means.transpose();
      y_pred = relaxed.predict(xtc);
      y_pred.rowwise() += y_means.transpose();
    } else {
      data::PairedDataset fold_ds;
      fold_ds.x = x_train;
      fold_ds.y = y_train;
      fold_ds.x_names = dataset.x_names;
      fold_ds.y_names = dataset.y_names;
      auto res = schedule::full_pipeline(fold_ds, v.config, v.sched,
                                         Rng::mix(seed, static_cast<std::uint64_t>(fold)),
                                         &x_test, &y_test);
      fs.histories[vi] = std::move(res.history);
      Matrix xt(x_test.rows(), res.model.input_dim);
      for (int j = 0; j < res.model.input_dim; ++j)
        xt.col(j) = x_test.col(res.model.surviving_inputs[static_cast<std::size_t>(j)]);
      y_pred = sbnn::forward(res.model, xt).y_pred;
    }
    fs.r2(static_cast<Eigen::Index>(vi)) = r2_multivariate(y_test, y_pred, y_means);
    fs.per_feat.row(static_cast<Eigen::Index>(vi)) =
        r2_per_feature(y_test, y_pred, y_means).transpose();
  }
  return fs;
}

}  // namespace

CvReport cross_validate(const data::PairedDataset& dataset,
                        const std::vector<VariantSpec>& variants, int folds, std::uint64_t seed,
                        bool paper_compat, bool parallel) {
  if (variants.empty()) throw ArgumentError("cross_validate: no variants");
  const int n = static_cast<int>(dataset.n());
  CvReport rep;
  rep.fold_assignments = make_folds(n, folds, seed);
  for (const auto& v : variants) rep.variant_names.push_back(v.name);
  rep.r2.resize(folds, static_cast<Eigen::Index>(variants.size()));
  rep.per_feature_r2.assign(variants.size(), Matrix(folds, dataset.q()));

  std::vector<FoldScores> scores(static_cast<std::size_t>(folds));
  auto run_fold = [&](int f) {
    scores[static_cast<std::size_t>(f)] =
        evaluate_fold(dataset, variants, rep.fold_assignments, f, seed, paper_compat);
  };

  if (parallel) {
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(folds));
    for (int f = 0; f < folds; ++f) {
      threads.emplace_back([&, f] {
        try {
          run_fold(f);
        } catch (...) {
          errors[static_cast<std::size_t>(f)] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else {
    for (int f = 0; f < folds; ++f) run_fold(f);
  }

  rep.histories.assign(variants.size(), std::vector<schedule::TrainHistory>(static_cast<std::size_t>(folds)));
  for (int f = 0; f < folds; ++f) {
    rep.r2.row(f) = scores[static_cast<std::size_t>(f)].r2.transpose();
    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
      rep.per_feature_r2[vi].row(f) =
          scores[static_cast<std::size_t>(f)].per_feat.row(static_cast<Eigen::Index>(vi));
      rep.histories[vi][static_cast<std::size_t>(f)] =
          std::move(scores[static_cast<std::size_t>(f)].histories[vi]);
    }
  }

  rep.mean_r2 = rep.r2.colwise().mean();
  rep.sd_r2.resize(rep.r2.cols());
  for (Eigen::Index j = 0; j < rep.r2.cols(); ++j) {
    const double m = rep.mean_r2(j);
    rep.sd_r2(j) = std::sqrt((rep.r2.col(j).array() - m).square().sum() / folds);
  }
  return rep;
}

json CvReport::to_json() const {
  json j;
  j["fold_assignments"] = fold_assignments;
  j["variants"] = variant_names;
  j["r2"] = matrix_to_json(r2);
  j["mean_r2"] = vector_to_json(mean_r2);
  j["sd_r2"] = vector_to_json(sd_r2);
  json pf = json::array();
  for (const auto& m : per_feature_r2) pf.push_back(matrix_to_json(m));
  j["per_feature_r2"] = pf;
  return j;
}

std::string CvReport::to_csv_string() const {
  std::ostringstream out;
  out << "fold,variant,r2\n";
  for (Eigen::Index f = 0; f < r2.rows(); ++f)
    for (Eigen::Index v = 0; v < r2.cols(); ++v) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", r2(f, v));
      out << f << ',' << variant_names[static_cast<std::size_t>(v)] << ',' << buf << '\n';
    }
  return out.str();
}

std::string CvReport::per_feature_csv_string() const {
  std::ostringstream out;
  out << "variant,fold,feature,r2\n";
  for (std::size_t vi = 0; vi < per_feature_r2.size(); ++vi) {
    const Matrix& m = per_feature_r2[vi];
    for (Eigen::Index f = 0; f < m.rows(); ++f)
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        out << variant_names[vi] << ',' << f << ',' << j << ',';
        if (std::isnan(m(f, j))) {
          out << "undefined";
        } else {
          char buf[40];
          std::snprintf(buf, sizeof buf, "%.17g", m(f, j));
          out << buf;
        }
        out << '\n';
      }
  }
  return out.str();
}

std::string CvReport::curves_csv_string() const {
  std::ostringstream out;
  out << "variant,fold,epoch,phase,monitor_r2\n";
  for (std::size_t vi = 0; vi < histories.size(); ++vi) {
    for (std::size_t f = 0; f < histories[vi].size(); ++f) {
      for (const auto& rec : histories[vi][f].records) {
        if (std::isnan(rec.monitor_r2)) continue;
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", rec.monitor_r2);
        out << variant_names[vi] << ',' << f << ',' << rec.epoch << ',' << rec.phase << ','
            << buf << '\n';
      }
    }
  }
  return out.str();
}

StabilityReport stability_analysis(const data::PairedDataset& dataset,
                                   const sbnn::SbnnConfig& config,
                                   const schedule::TrainSchedule& sched, int n_runs,
                                   std::uint64_t base_seed,
                                   const std::vector<std::uint64_t>* explicit_seeds) {
  if (n_runs < 1) throw ArgumentError("stability_analysis: n_runs must be >= 1");
  StabilityReport rep;
  for (int r = 0; r < n_runs; ++r) {
    const std::uint64_t seed = explicit_seeds
                                   ? (*explicit_seeds)[static_cast<std::size_t>(r)]
                                   : base_seed + static_cast<std::uint64_t>(r);
    auto res = schedule::full_pipeline(dataset, config, sched, seed);
    std::vector<int> sel = res.model.surviving_inputs;
    std::sort(sel.begin(), sel.end());
    rep.runs.push_back(std::move(sel));
  }

  std::map<int, int> times_selected;
  for (const auto& run : rep.runs)
    for (int f : run) ++times_selected[f];
  rep.histogram.assign(static_cast<std::size_t>(n_runs), 0);
  for (const auto& [feat, k] : times_selected) ++rep.histogram[static_cast<std::size_t>(k - 1)];

  if (n_runs < 2) {
    rep.pairwise_mean_overlap = std::numeric_limits<double>::quiet_NaN();
  } else {
    double sum = 0;
    int pairs = 0;
    for (std::size_t i = 0; i < rep.runs.size(); ++i)
      for (std::size_t j = i + 1; j < rep.runs.size(); ++j) {
        std::vector<int> inter;
        std::set_intersection(rep.runs[i].begin(), rep.runs[i].end(), rep.runs[j].begin(),
                              rep.runs[j].end(), std::back_inserter(inter));
        sum += static_cast<double>(inter.size());
        ++pairs;
      }
    rep.pairwise_mean_overlap = sum / pairs;
  }
  return rep;
}

json StabilityReport::to_json() const {
  json j;
  j["runs"] = runs;
  j["histogram"] = histogram;
  if (std::isnan(pairwise_mean_overlap))
    j["pairwise_mean_overlap"] = nullptr;
  else
    j["pairwise_mean_overlap"] = pairwise_mean_overlap;
  return j;
}

std::string StabilityReport::to_csv_string() const {
  std::ostringstream out;
  out << "times_selected,feature_count\n";
  for (std::size_t k = 0; k < histogram.size(); ++k)
    out << (k + 1) << ',' << histogram[k] << '\n';
  return out.str();
}

}  // namespace pairview::eval
