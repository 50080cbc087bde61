#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "pairview/data.hpp"
#include "pairview/errors.hpp"
#include "pairview/eval.hpp"
#include "pairview/rng.hpp"

using namespace pairview;

namespace {

data::PairedDataset toy_dataset(int n, int p, int q, std::uint64_t seed, bool nonlinear = false) {
  data::SynthGroundTruth truth;
  truth.support = {0, 1, 2};
  truth.latent_dim = 2;
  truth.noise_sd = 0.2;
  truth.link = nonlinear ? data::Link::Nonlinear : data::Link::Linear;
  auto [ds, t] = data::synth_generate(n, p, q, truth, seed);
  ds.x = data::zscore_fit(ds.x).apply(ds.x);
  ds.y = data::zscore_fit(ds.y).apply(ds.y);
  return ds;
}

schedule::TrainSchedule tiny_schedule() {
  schedule::TrainSchedule s;
  s.pretrain_epochs = 3;
  s.k_clusters = 3;
  s.frozen_epochs = 3;
  s.unfrozen_epochs = 3;
  s.prune_to = 4;
  s.postprune_epochs = 3;
  s.batch_size = 16;
  return s;
}

eval::VariantSpec tiny_sbnn_variant() {
  eval::VariantSpec v = eval::make_variant("sbnn-2");
  v.config.encoder_sizes = {12, 6};
  v.config.decoder_sizes = {6, 12};
  v.sched = tiny_schedule();
  v.target_genes = 4;
  return v;
}

}  // namespace

TEST_CASE("r2 arithmetic identities") {
  Matrix y(4, 1), pred(4, 1);
  y << 1, 2, 3, 4;
  Vector means(1);
  means << 2.5;

  // perfect prediction -> 1
  CHECK(eval::r2_multivariate(y, y, means) == doctest::Approx(1.0).epsilon(1e-12));
  // predicting the train means -> 0
  pred.setConstant(2.5);
  CHECK(std::abs(eval::r2_multivariate(y, pred, means)) < 1e-12);
  // residual norm exactly half the centered norm -> 0.75
  // centered squared norm = 2.25+0.25+0.25+2.25 = 5; build residual = 1.25
  pred = y;
  pred(0, 0) += std::sqrt(1.25);
  CHECK(eval::r2_multivariate(y, pred, means) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("r2 rejects a degenerate reference") {
  Matrix y = Matrix::Constant(3, 1, 2.0);
  Vector means(1);
  means << 2.0;
  CHECK_THROWS_AS(eval::r2_multivariate(y, y, means), DataError);
}

TEST_CASE("multivariate r2 decomposes over per-feature norms") {
  Rng rng(3);
  Matrix y(20, 4), pred(20, 4);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 4; ++j) {
      y(i, j) = rng.normal();
      pred(i, j) = rng.normal();
    }
  Vector means(4);
  for (int j = 0; j < 4; ++j) means(j) = rng.normal() * 0.1;

  const double r2 = eval::r2_multivariate(y, pred, means);
  double res = 0, tot = 0;
  for (int j = 0; j < 4; ++j) {
    res += (y.col(j) - pred.col(j)).squaredNorm();
    tot += (y.col(j).array() - means(j)).square().sum();
  }
  CHECK(r2 == doctest::Approx(1.0 - res / tot).epsilon(1e-12));

  // And each per-feature entry matches its own scalar identity.
  const Vector per = eval::r2_per_feature(y, pred, means);
  for (int j = 0; j < 4; ++j) {
    const double denom = (y.col(j).array() - means(j)).square().sum();
    CHECK(per(j) ==
          doctest::Approx(1.0 - (y.col(j) - pred.col(j)).squaredNorm() / denom).epsilon(1e-12));
  }
}

TEST_CASE("per-feature r2 flags degenerate columns with NaN") {
  Matrix y(5, 2);
  y.col(0).setConstant(1.0);
  y.col(1) << 1, 2, 3, 4, 5;
  Vector means(2);
  means << 1.0, 3.0;
  const Vector per = eval::r2_per_feature(y, y, means);
  CHECK(std::isnan(per(0)));
  CHECK(per(1) == doctest::Approx(1.0));
}

TEST_CASE("make_folds partitions all samples into balanced folds") {
  const auto f = eval::make_folds(23, 5, 9);
  REQUIRE(f.size() == 23);
  std::vector<int> counts(5, 0);
  for (int fi : f) {
    REQUIRE(fi >= 0);
    REQUIRE(fi < 5);
    ++counts[static_cast<std::size_t>(fi)];
  }
  // 23 = 5+5+5+4+4, larger folds first
  CHECK(counts == std::vector<int>{5, 5, 5, 4, 4});
  CHECK(eval::make_folds(23, 5, 9) == f);
  CHECK(eval::make_folds(23, 5, 10) != f);
}

TEST_CASE("make_variant wires the published variants") {
  const auto a = eval::make_variant("srrr-2");
  CHECK(a.kind == eval::VariantKind::Srrr);
  CHECK(a.rank == 2);
  const auto b = eval::make_variant("srrr-full");
  CHECK(b.rank == 0);
  const auto c = eval::make_variant("sbnn-2");
  CHECK(c.kind == eval::VariantKind::Sbnn);
  CHECK(c.config.bottleneck == 2);
  const auto d = eval::make_variant("sbnn-64");
  CHECK(d.config.bottleneck == 64);
  const auto e = eval::make_variant("oracle");
  CHECK(e.kind == eval::VariantKind::Oracle);
  CHECK_THROWS_AS(eval::make_variant("nope"), ArgumentError);
}

TEST_CASE("cross_validate scores a linear problem well with srrr") {
  const auto ds = toy_dataset(150, 8, 4, 21);
  auto v = eval::make_variant("srrr-2");
  v.target_genes = 3;
  const auto rep = eval::cross_validate(ds, {v}, 5, 21);
  REQUIRE(rep.r2.rows() == 5);
  REQUIRE(rep.r2.cols() == 1);
  CHECK(rep.mean_r2(0) > 0.5);
  CHECK(rep.fold_assignments == eval::make_folds(150, 5, 21));
  // mean/sd columns agree with the fold matrix
  CHECK(rep.mean_r2(0) == doctest::Approx(rep.r2.col(0).mean()).epsilon(1e-12));
}

TEST_CASE("oracle variant beats noise on the true support") {
  const auto ds = toy_dataset(150, 8, 4, 25);
  const auto rep = eval::cross_validate(ds, {eval::make_variant("oracle")}, 5, 25);
  CHECK(rep.mean_r2(0) > 0.5);
}

TEST_CASE("cross_validate is deterministic, serial equals parallel") {
  const auto ds = toy_dataset(80, 6, 3, 31);
  std::vector<eval::VariantSpec> variants = {tiny_sbnn_variant()};
  auto v2 = eval::make_variant("srrr-2");
  v2.target_genes = 3;
  variants.push_back(v2);
  const auto a = eval::cross_validate(ds, variants, 3, 31, true, false);
  const auto b = eval::cross_validate(ds, variants, 3, 31, true, true);
  CHECK(a.r2 == b.r2);
  CHECK(a.to_json().dump() == b.to_json().dump());
  CHECK(a.to_csv_string() == b.to_csv_string());
  CHECK(a.curves_csv_string() == b.curves_csv_string());
}

TEST_CASE("paper_compat false refits the standardizer per fold") {
  auto ds = toy_dataset(80, 6, 3, 41);
  ds.x.col(0).array() += 5.0;  // global offset the per-fold zscore removes
  const auto v = tiny_sbnn_variant();
  const auto compat = eval::cross_validate(ds, {v}, 3, 41, true);
  const auto strict = eval::cross_validate(ds, {v}, 3, 41, false);
  CHECK(compat.r2 != strict.r2);
}

TEST_CASE("cv report serializations are consistent") {
  const auto ds = toy_dataset(60, 6, 3, 51);
  auto v = eval::make_variant("srrr-2");
  v.target_genes = 3;
  const auto rep = eval::cross_validate(ds, {v}, 3, 51);
  const json j = rep.to_json();
  CHECK(j.at("variants").size() == 1);
  CHECK(j.at("r2").at("rows") == 3);
  const std::string csv = rep.to_csv_string();
  CHECK(csv.rfind("fold,variant,r2", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 folds
  const std::string pf = rep.per_feature_csv_string();
  CHECK(pf.rfind("variant,fold,feature,r2", 0) == 0);
  CHECK(std::count(pf.begin(), pf.end(), '\n') == 1 + 3 * 3);
}

TEST_CASE("stability analysis: duplicate seeds overlap fully") {
  const auto ds = toy_dataset(70, 8, 3, 61);
  const auto v = tiny_sbnn_variant();
  const std::vector<std::uint64_t> seeds = {5, 5, 5};
  const auto rep = eval::stability_analysis(ds, v.config, v.sched, 3, 0, &seeds);
  REQUIRE(rep.runs.size() == 3);
  CHECK(rep.runs[0] == rep.runs[1]);
  CHECK(rep.runs[1] == rep.runs[2]);
  CHECK(rep.pairwise_mean_overlap == doctest::Approx(v.sched.prune_to));
  // Histogram: every selected feature appears in all 3 runs.
  REQUIRE(rep.histogram.size() == 3);
  CHECK(rep.histogram[2] == v.sched.prune_to);
  CHECK(rep.histogram[0] == 0);
  CHECK(rep.histogram[1] == 0);
}

TEST_CASE("stability histogram sums to the union of selected features") {
  const auto ds = toy_dataset(70, 8, 3, 71);
  const auto v = tiny_sbnn_variant();
  const auto rep = eval::stability_analysis(ds, v.config, v.sched, 3, 71);
  std::set<int> uni;
  for (const auto& run : rep.runs) uni.insert(run.begin(), run.end());
  CHECK(std::accumulate(rep.histogram.begin(), rep.histogram.end(), 0) ==
        static_cast<int>(uni.size()));
  const std::string csv = rep.to_csv_string();
  CHECK(csv.rfind("times_selected,feature_count", 0) == 0);
}
