#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pairview/data.hpp"
#include "pairview/sbnn.hpp"
#include "pairview/schedule.hpp"
#include "pairview/types.hpp"

namespace pairview::eval {

// Multivariate test-set R^2: 1 - ||Y - f(X)||^2 / ||Y - mean_train||^2 where
// the target is centered by the training-set means.
double r2_multivariate(const Matrix& y_test, const Matrix& y_pred, const Vector& train_means);

// Column-wise variant. Zero-norm test columns yield NaN sentinels.
Vector r2_per_feature(const Matrix& y_test, const Matrix& y_pred, const Vector& train_means);

// Seeded permutation partitioned into folds of size floor(n/folds) or
// ceil(n/folds). Returns fold index per sample.
std::vector<int> make_folds(int n, int folds, std::uint64_t seed);

enum class VariantKind { Srrr, Sbnn, Oracle };

struct VariantSpec {
  std::string name;
  VariantKind kind = VariantKind::Srrr;
  int rank = 2;             // sRRR rank; 0 means full rank (q)
  int target_genes = 25;    // sRRR path target
  sbnn::SbnnConfig config;  // sBNN variants
  schedule::TrainSchedule sched;
};

VariantSpec make_variant(const std::string& name);  // "srrr-2" | "srrr-full" | "sbnn-2" | "sbnn-64"

struct CvReport {
  std::vector<int> fold_assignments;
  std::vector<std::string> variant_names;
  Matrix r2;                            // folds x variants
  std::vector<Matrix> per_feature_r2;   // per variant: folds x q
  Vector mean_r2, sd_r2;                // per variant
  // histories[variant][fold]; non-empty for sBNN variants only
  std::vector<std::vector<schedule::TrainHistory>> histories;

  json to_json() const;
  std::string to_csv_string() const;        // one row per (fold, variant)
  std::string per_feature_csv_string() const;  // long format: variant,fold,feature,r2
  std::string curves_csv_string() const;       // long format: variant,fold,epoch,phase,monitor_r2
};

// Fits every variant on each training fold and scores the held-out fold.
// paper_compat = true: the dataset's (global) standardization is kept and
// test targets are centered with training-fold means; false: z-scoring is
// refit per fold on the training split only.
CvReport cross_validate(const data::PairedDataset& dataset,
                        const std::vector<VariantSpec>& variants, int folds, std::uint64_t seed,
                        bool paper_compat = true, bool parallel = false);

struct StabilityReport {
  std::vector<std::vector<int>> runs;  // selected original feature indices per run
  std::vector<int> histogram;          // histogram[k-1] = #features selected exactly k times
  double pairwise_mean_overlap = 0;    // NaN when fewer than 2 runs

  json to_json() const;
  std::string to_csv_string() const;
};

StabilityReport stability_analysis(const data::PairedDataset& dataset,
                                   const sbnn::SbnnConfig& config,
                                   const schedule::TrainSchedule& sched, int n_runs,
                                   std::uint64_t base_seed,
                                   const std::vector<std::uint64_t>* explicit_seeds = nullptr);

}  // namespace pairview::eval
