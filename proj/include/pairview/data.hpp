#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pairview/types.hpp"

namespace pairview::data {

// Two aligned views over the same samples: predictor matrix x (n x p) and
// response matrix y (n x q).
struct PairedDataset {
  Matrix x;
  Matrix y;
  std::vector<std::string> x_names;
  std::vector<std::string> y_names;
  std::vector<std::string> sample_ids;
  std::vector<std::string> sample_labels;  // empty, or one per sample
  std::vector<std::string> sample_colors;  // empty, or one per sample ("#rrggbb")

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index p() const { return x.cols(); }
  Eigen::Index q() const { return y.cols(); }
};

enum class Link { Linear, Nonlinear };

struct SynthGroundTruth {
  std::vector<int> support;  // true predictor indices
  int latent_dim = 2;
  Link link = Link::Linear;
  double noise_sd = 0.0;
};

// CSV layout: UTF-8, comma-delimited, header row = feature names, first
// column = sample identifier. Meta CSV columns: id,label,color.
PairedDataset load_paired_csv(const std::string& x_path, const std::string& y_path,
                              const std::optional<std::string>& meta_path = std::nullopt);

// Full-precision round trip: reloading reproduces the matrices exactly.
void save_paired_csv(const PairedDataset& ds, const std::string& x_path,
                     const std::string& y_path,
                     const std::optional<std::string>& meta_path = std::nullopt);

// Scales each row so its sum equals the median of the original row sums.
Matrix normalize_depth(const Matrix& counts);

// Elementwise log2(x + 1).
Matrix log_transform(const Matrix& m);

// Keeps the n_genes predictor columns with the largest variance, original
// column order preserved. Ties broken by lower column index.
PairedDataset select_hvg(const PairedDataset& ds, int n_genes);

struct Standardizer {
  Vector means;
  Vector sds;  // population convention (divide by n)
  Matrix apply(const Matrix& m) const;
};

// Fits column means/SDs on train. Constant train columns are a hard error.
Standardizer zscore_fit(const Matrix& train);

// Applies the whole preprocessing chain in the fixed order
// depth -> log -> HVG -> z-score (each step optional).
struct PreprocessOptions {
  bool depth_normalize = true;
  bool log = true;
  int hvg = 0;  // 0 = keep all
  bool zscore = true;
};
PairedDataset preprocess(const PairedDataset& ds, const PreprocessOptions& opts);

// Synthetic paired data with known ground truth. X ~ standard normal,
// Z = X[:, support] * A; linear: Y = Z*B + noise, nonlinear:
// Y = tanh(Z)*B + (Z.^2)*C + noise. Deterministic given the seed.
std::pair<PairedDataset, SynthGroundTruth> synth_generate(int n, int p, int q,
                                                          const SynthGroundTruth& truth,
                                                          std::uint64_t seed);

}  // namespace pairview::data
