#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "pairview/errors.hpp"
#include "pairview/rng.hpp"
#include "pairview/sbnn.hpp"

using namespace pairview;
using namespace pairview::sbnn;

namespace {

Matrix random_matrix(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) m(i, j) = rng.normal();
  return m;
}

SbnnConfig tiny_config(std::uint64_t seed = 0) {
  SbnnConfig c;
  c.encoder_sizes = {5, 3};
  c.bottleneck = 2;
  c.decoder_sizes = {3, 5};
  c.l2_penalty = 1e-4;   // big enough for finite differences to see it
  c.group_lasso = 0.05;
  c.seed = seed;
  return c;
}

std::vector<Layer*> all_layers(SbnnModel& m) {
  std::vector<Layer*> out;
  for (auto& l : m.encoder) out.push_back(&l);
  if (m.head_mode == HeadMode::Classification) {
    for (auto& l : m.cls) out.push_back(&l);
  } else {
    for (auto& l : m.allo) out.push_back(&l);
    for (auto& l : m.recon) out.push_back(&l);
  }
  return out;
}

// Central finite differences against every parameter of every layer.
void check_gradients(SbnnModel& model, const std::function<double()>& loss_fn,
                     const Gradients& grads) {
  const double h = 1e-5;
  std::vector<const std::vector<LayerGrad>*> stacks = {&grads.encoder};
  std::vector<std::vector<Layer>*> layer_stacks = {&model.encoder};
  if (model.head_mode == HeadMode::Classification) {
    stacks.push_back(&grads.cls);
    layer_stacks.push_back(&model.cls);
  } else {
    stacks.push_back(&grads.allo);
    stacks.push_back(&grads.recon);
    layer_stacks.push_back(&model.allo);
    layer_stacks.push_back(&model.recon);
  }
  for (std::size_t s = 0; s < stacks.size(); ++s) {
    for (std::size_t li = 0; li < layer_stacks[s]->size(); ++li) {
      Layer& layer = (*layer_stacks[s])[li];
      const LayerGrad& g = (*stacks[s])[li];
      auto probe = [&](double& param, double analytic) {
        const double orig = param;
        param = orig + h;
        const double up = loss_fn();
        param = orig - h;
        const double down = loss_fn();
        param = orig;
        const double numeric = (up - down) / (2 * h);
        const double scale = std::max({1e-8, std::abs(numeric), std::abs(analytic)});
        CHECK(std::abs(numeric - analytic) / scale < 1e-4);
      };
      for (Eigen::Index i = 0; i < layer.w.rows(); ++i)
        for (Eigen::Index j = 0; j < layer.w.cols(); ++j) probe(layer.w(i, j), g.w(i, j));
      for (Eigen::Index i = 0; i < layer.b.size(); ++i) probe(layer.b(i), g.b(i));
    }
  }
}

}  // namespace

TEST_CASE("network construction has the right shapes and init scale") {
  const SbnnConfig c = tiny_config(3);
  SbnnModel m = build_network(c, 7, 2);
  REQUIRE(m.encoder.size() == 3);  // 7->5, 5->3, 3->bottleneck
  CHECK(m.encoder[0].w.rows() == 7);
  CHECK(m.encoder[0].w.cols() == 5);
  CHECK(m.encoder[2].w.cols() == 2);
  CHECK(m.encoder[2].act == Activation::Linear);
  REQUIRE(m.allo.size() == 3);  // 2->3, 3->5, 5->2
  CHECK(m.allo.back().w.cols() == 2);
  CHECK(m.allo.back().readout);
  REQUIRE(m.recon.size() == 3);  // 2->3, 3->5, 5->7
  CHECK(m.recon.back().w.cols() == 7);
  for (const Layer* l : all_layers(m)) {
    CHECK(l->b.norm() == 0.0);
    const double limit =
        std::sqrt(6.0 / static_cast<double>(l->w.rows() + l->w.cols()));
    CHECK(l->w.cwiseAbs().maxCoeff() <= limit);
    CHECK(l->w.cwiseAbs().maxCoeff() > 0.0);
  }
  // init is deterministic in the seed
  SbnnModel m2 = build_network(c, 7, 2);
  CHECK(m.encoder[0].w == m2.encoder[0].w);
  SbnnConfig c2 = c;
  c2.seed = 4;
  SbnnModel m3 = build_network(c2, 7, 2);
  CHECK(m.encoder[0].w != m3.encoder[0].w);
}

TEST_CASE("regression gradients match central finite differences") {
  SbnnModel m = build_network(tiny_config(1), 7, 2);
  const Matrix x = random_matrix(4, 7, 10);
  const Matrix y = random_matrix(4, 2, 11);
  const auto [terms, grads] = loss_and_gradients(m, x, y);
  CHECK(terms.total > 0);
  check_gradients(m, [&] { return loss_and_gradients(m, x, y).first.total; }, grads);
}

TEST_CASE("classification gradients match central finite differences") {
  SbnnModel m = build_network(tiny_config(2), 7, 2);
  swap_head(m, HeadMode::Classification, 4);
  const Matrix x = random_matrix(5, 7, 20);
  const std::vector<int> labels = {0, 2, 1, 3, 2};
  const auto [terms, grads] = loss_and_gradients_classification(m, x, labels);
  check_gradients(
      m, [&] { return loss_and_gradients_classification(m, x, labels).first.total; }, grads);
}

TEST_CASE("loss terms decompose as documented") {
  SbnnConfig c = tiny_config(5);
  c.recon_weight = 0.7;
  SbnnModel m = build_network(c, 6, 2);
  const Matrix x = random_matrix(8, 6, 30);
  const Matrix y = random_matrix(8, 2, 31);
  const auto [terms, grads] = loss_and_gradients(m, x, y);
  const auto f = forward(m, x);
  CHECK(terms.mse_allo ==
        doctest::Approx((f.y_pred - y).squaredNorm() / (8.0 * 2.0)).epsilon(1e-12));
  CHECK(terms.mse_recon ==
        doctest::Approx((f.x_recon - x).squaredNorm() / (8.0 * 6.0)).epsilon(1e-12));
  double gl = 0;
  for (Eigen::Index i = 0; i < 6; ++i) gl += m.encoder[0].w.row(i).norm();
  CHECK(terms.group_lasso == doctest::Approx(c.group_lasso * gl).epsilon(1e-12));
  CHECK(terms.total == doctest::Approx(terms.mse_allo + c.recon_weight * terms.mse_recon +
                                       terms.l2 + terms.group_lasso)
                           .epsilon(1e-12));
  // group lasso override
  const auto [t0, g0] = loss_and_gradients(m, x, y, 0.0);
  CHECK(t0.group_lasso == 0.0);
}

TEST_CASE("readout biases are exempt from the l2 penalty") {
  SbnnConfig c = tiny_config(6);
  SbnnModel m = build_network(c, 6, 2);
  const Matrix x = random_matrix(4, 6, 40);
  const Matrix y = random_matrix(4, 2, 41);
  const double before = loss_and_gradients(m, x, y).first.l2;
  m.allo.back().b.array() += 100.0;  // readout bias shift must not move l2
  SbnnModel shifted = m;
  const double after = loss_and_gradients(shifted, x, y).first.l2;
  CHECK(after == doctest::Approx(before).epsilon(1e-12));
  m.encoder[0].b.array() += 1.0;  // hidden bias shift must move it
  CHECK(loss_and_gradients(m, x, y).first.l2 > before);
}

TEST_CASE("adam_step matches a scalar hand trace") {
  // One 1x1 linear layer, fixed gradient stream. Hand-run Adam with
  // beta1=0.9, beta2=0.999, eps=1e-7.
  SbnnConfig c;
  c.encoder_sizes = {};
  c.bottleneck = 1;
  c.decoder_sizes = {};
  c.l2_penalty = 0;
  c.group_lasso = 0;
  c.seed = 1;
  SbnnModel m = build_network(c, 1, 1);
  const double w0 = m.encoder[0].w(0, 0);
  Gradients g;
  g.encoder.resize(1);
  g.encoder[0].w = Matrix::Constant(1, 1, 0.5);
  g.encoder[0].b = Vector::Zero(1);
  g.allo.resize(1);
  g.allo[0].w = Matrix::Zero(1, 1);
  g.allo[0].b = Vector::Zero(1);
  g.recon.resize(1);
  g.recon[0].w = Matrix::Zero(1, 1);
  g.recon[0].b = Vector::Zero(1);

  double mw = 0, vw = 0, w = w0;
  const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-7;
  for (int t = 1; t <= 3; ++t) {
    adam_step(m, g, lr);
    mw = b1 * mw + (1 - b1) * 0.5;
    vw = b2 * vw + (1 - b2) * 0.25;
    const double mhat = mw / (1 - std::pow(b1, t));
    const double vhat = vw / (1 - std::pow(b2, t));
    w -= lr * mhat / (std::sqrt(vhat) + eps);
    CHECK(m.encoder[0].w(0, 0) == doctest::Approx(w).epsilon(1e-12));
  }
}

TEST_CASE("frozen layers receive zero gradients and are skipped by adam") {
  SbnnModel m = build_network(tiny_config(7), 6, 2);
  set_frozen(m, {0, 1}, true);
  const Matrix x = random_matrix(4, 6, 50);
  const Matrix y = random_matrix(4, 2, 51);
  const auto [terms, grads] = loss_and_gradients(m, x, y);
  CHECK(grads.encoder[0].w.norm() == 0.0);
  CHECK(grads.encoder[1].w.norm() == 0.0);
  CHECK(grads.encoder[2].w.norm() > 0.0);
  const Matrix before = m.encoder[0].w;
  adam_step(m, grads, 0.01);
  CHECK(m.encoder[0].w == before);
  set_frozen(m, {0, 1}, false);
  const auto grads2 = loss_and_gradients(m, x, y).second;
  CHECK(grads2.encoder[0].w.norm() > 0.0);
}

TEST_CASE("prune_inputs keeps the largest rows and remaps state") {
  SbnnModel m = build_network(tiny_config(8), 6, 2);
  // Plant known row norms: rows 1, 3, 4 largest.
  for (int i = 0; i < 6; ++i) m.encoder[0].w.row(i).setConstant(0.01 * (i + 1));
  m.encoder[0].w.row(1).setConstant(5.0);
  m.encoder[0].w.row(3).setConstant(4.0);
  m.encoder[0].w.row(4).setConstant(3.0);
  // Seed Adam moments so retention is observable.
  const Matrix x = random_matrix(4, 6, 60);
  const Matrix y = random_matrix(4, 2, 61);
  adam_step(m, loss_and_gradients(m, x, y).second, 0.001);
  const Matrix moments_before = m.encoder[0].adam.mw;
  const Matrix recon_w_before = m.recon.back().w;
  const Vector recon_b_before = m.recon.back().b;

  const auto kept = prune_inputs(m, 3);
  CHECK(kept == std::vector<int>{1, 3, 4});
  CHECK(m.surviving_inputs == std::vector<int>{1, 3, 4});
  CHECK(m.input_dim == 3);
  CHECK(m.encoder[0].w.rows() == 3);
  CHECK(m.recon.back().w.cols() == 3);
  for (int j = 0; j < 3; ++j) {
    const int orig = kept[static_cast<std::size_t>(j)];
    CHECK(m.encoder[0].adam.mw.row(j) == moments_before.row(orig));
    CHECK(m.recon.back().w.col(j) == recon_w_before.col(orig));
    CHECK(m.recon.back().b(j) == recon_b_before(orig));
  }
  // Pruned model still runs forward on the reduced inputs.
  const auto f = forward(m, random_matrix(2, 3, 62));
  CHECK(f.x_recon.cols() == 3);
}

TEST_CASE("prune_inputs breaks norm ties toward the lower index") {
  SbnnModel m = build_network(tiny_config(9), 4, 2);
  m.encoder[0].w.setZero();
  m.encoder[0].w.row(0).setConstant(1.0);
  m.encoder[0].w.row(1).setConstant(1.0);
  m.encoder[0].w.row(2).setConstant(1.0);
  const auto kept = prune_inputs(m, 2);
  CHECK(kept == std::vector<int>{0, 1});
}

TEST_CASE("swap_head stashes and restores the dual heads") {
  SbnnModel m = build_network(tiny_config(10), 6, 2);
  const Matrix allo_hidden = m.allo[0].w;
  const Matrix recon_hidden = m.recon[0].w;
  const Matrix trunk = m.encoder[0].w;
  swap_head(m, HeadMode::Classification, 5);
  CHECK(m.head_mode == HeadMode::Classification);
  CHECK(m.n_classes == 5);
  REQUIRE(m.cls.size() == 1);
  CHECK(m.cls[0].w.rows() == 2);
  CHECK(m.cls[0].w.cols() == 5);
  CHECK(m.encoder[0].w == trunk);
  const Matrix first_cls = m.cls[0].w;
  swap_head(m, HeadMode::RegressionReconstruction);
  CHECK(m.head_mode == HeadMode::RegressionReconstruction);
  CHECK(m.allo[0].w == allo_hidden);
  CHECK(m.recon[0].w == recon_hidden);
  // Readouts come back freshly initialized, not zero and not the old ones.
  CHECK(m.allo.back().w.norm() > 0.0);
  swap_head(m, HeadMode::Classification, 5);
  CHECK(m.cls[0].w != first_cls);  // fresh init each swap
}

TEST_CASE("classification forward produces a row-stochastic matrix") {
  SbnnModel m = build_network(tiny_config(11), 6, 2);
  swap_head(m, HeadMode::Classification, 4);
  Matrix x = random_matrix(7, 6, 70);
  x.row(0).setConstant(1000.0);  // softmax must stay finite under big logits
  const auto f = forward(m, x);
  REQUIRE(f.probs.rows() == 7);
  REQUIRE(f.probs.cols() == 4);
  CHECK(f.probs.allFinite());
  for (Eigen::Index i = 0; i < 7; ++i)
    CHECK(f.probs.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.probs.minCoeff() >= 0.0);
}

TEST_CASE("snapshot and restore round trip the parameters") {
  SbnnModel m = build_network(tiny_config(12), 6, 2);
  const auto snap = take_snapshot(m);
  const Matrix x = random_matrix(4, 6, 80);
  const Matrix y = random_matrix(4, 2, 81);
  for (int t = 0; t < 5; ++t) adam_step(m, loss_and_gradients(m, x, y).second, 0.01);
  const double moved = loss_and_gradients(m, x, y).first.total;
  restore_snapshot(m, snap);
  SbnnModel fresh = build_network(tiny_config(12), 6, 2);
  CHECK(m.encoder[0].w == fresh.encoder[0].w);
  CHECK(m.allo.back().b == fresh.allo.back().b);
  CHECK(loss_and_gradients(m, x, y).first.total != moved);
}

TEST_CASE("a few adam steps reduce the training loss") {
  SbnnModel m = build_network(tiny_config(13), 6, 2);
  const Matrix x = random_matrix(16, 6, 90);
  const Matrix y = random_matrix(16, 2, 91);
  const double before = loss_and_gradients(m, x, y).first.total;
  for (int t = 0; t < 200; ++t) adam_step(m, loss_and_gradients(m, x, y).second, 0.005);
  CHECK(loss_and_gradients(m, x, y).first.total < before);
}

TEST_CASE("model json round trip preserves the forward map") {
  SbnnModel m = build_network(tiny_config(14), 6, 2);
  prune_inputs(m, 4);
  const json j = sbnn::model_to_json(m);
  CHECK(j.at("adam_moments_included") == false);
  SbnnModel back = sbnn::model_from_json(j);
  CHECK(back.surviving_inputs == m.surviving_inputs);
  const Matrix x = random_matrix(5, 4, 100);
  const auto fa = forward(m, x);
  const auto fb = forward(back, x);
  CHECK(fa.y_pred == fb.y_pred);
  CHECK(fa.latent == fb.latent);
}

TEST_CASE("non-finite activations raise a numeric fault") {
  SbnnModel m = build_network(tiny_config(15), 4, 2);
  m.encoder[0].w.array() += 1e200;
  const Matrix x = random_matrix(3, 4, 110) * 1e200;
  const Matrix y = random_matrix(3, 2, 111);
  CHECK_THROWS_AS(loss_and_gradients(m, x, y), NumericError);
}
