#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pairview/types.hpp"

namespace pairview::sbnn {

enum class Activation { Linear, Elu };
enum class HeadMode { RegressionReconstruction, Classification };

struct SbnnConfig {
  std::vector<int> encoder_sizes{512, 128};
  int bottleneck = 2;
  std::vector<int> decoder_sizes{128, 512};
  double l2_penalty = 1e-10;
  double group_lasso = 0.1;
  double recon_weight = 1.0;
  std::uint64_t seed = 0;
};

struct AdamState {
  Matrix mw, vw;
  Vector mb, vb;
};

struct Layer {
  Matrix w;  // in x out; input feature i lives in row i
  Vector b;
  Activation act = Activation::Linear;
  bool frozen = false;
  bool readout = false;  // readout biases are exempt from the l2 penalty
  AdamState adam;
};

struct LayerGrad {
  Matrix w;
  Vector b;
};

struct Gradients {
  std::vector<LayerGrad> encoder, allo, recon, cls;
};

struct LossTerms {
  double mse_allo = 0, mse_recon = 0, cross_entropy = 0;
  double l2 = 0, group_lasso = 0;
  double total = 0;
};

// Encoder trunk with two decoder heads (alloencoder predicts the other view,
// autoencoder reconstructs the input view), or a single softmax readout in
// classification mode.
struct SbnnModel {
  SbnnConfig config;
  std::vector<Layer> encoder;
  std::vector<Layer> allo;
  std::vector<Layer> recon;
  std::vector<Layer> cls;
  std::vector<Layer> stashed_allo, stashed_recon;  // parked while classifying
  HeadMode head_mode = HeadMode::RegressionReconstruction;
  std::vector<int> surviving_inputs;  // indices into the original p predictors
  int input_dim = 0;                  // |surviving_inputs|
  int output_dim = 0;                 // q
  int n_classes = 0;
  long long adam_t = 0;
  std::uint64_t init_counter = 0;  // drives deterministic fresh inits
};

struct ForwardResult {
  Matrix latent;   // bottleneck pre-head activations (linear)
  Matrix y_pred;   // regression mode
  Matrix x_recon;  // regression mode
  Matrix probs;    // classification mode, rows sum to 1
};

SbnnModel build_network(const SbnnConfig& config, int p, int q);

ForwardResult forward(const SbnnModel& model, const Matrix& x_batch);

// Regression+reconstruction loss: MSE(y_pred, y) + recon_weight*MSE(x_recon, x)
// + l2*sum(params^2) + group_lasso*sum_i ||W1_i.||. Gradients of frozen layers
// are zero. group_lasso_override replaces the config strength when set.
std::pair<LossTerms, Gradients> loss_and_gradients(
    const SbnnModel& model, const Matrix& x_batch, const Matrix& y_batch,
    std::optional<double> group_lasso_override = std::nullopt);

// Classification loss: categorical cross-entropy + the same penalties.
std::pair<LossTerms, Gradients> loss_and_gradients_classification(
    const SbnnModel& model, const Matrix& x_batch, const std::vector<int>& labels,
    std::optional<double> group_lasso_override = std::nullopt);

// Unpenalized mean cross-entropy.
double cross_entropy(const SbnnModel& model, const Matrix& x, const std::vector<int>& labels);

// Standard Adam (beta1=0.9, beta2=0.999, eps=1e-7). Frozen layers untouched.
void adam_step(SbnnModel& model, const Gradients& grads, double lr);

// Flat layer indexing: encoder layers first, then the active head layers.
void set_frozen(SbnnModel& model, const std::vector<int>& layer_indices, bool frozen);
int layer_count(const SbnnModel& model);

// Keeps the k inputs with the largest first-layer row norms (ties to the lower
// index); shrinks the autoencoder readout to the same features. Retained rows
// keep their Adam moments. Returns the kept indices into the current inputs.
std::vector<int> prune_inputs(SbnnModel& model, int k);

// Classification mode installs a fresh bottleneck->softmax readout and parks
// the dual heads; regression mode restores them with fresh readout layers.
// Trunk weights are never touched.
void swap_head(SbnnModel& model, HeadMode mode, std::optional<int> n_classes = std::nullopt);

// Deep copy / restore of all trainable parameters (early-stopping snapshots).
struct Snapshot {
  std::vector<std::pair<Matrix, Vector>> params;
};
Snapshot take_snapshot(const SbnnModel& model);
void restore_snapshot(SbnnModel& model, const Snapshot& s);

json model_to_json(const SbnnModel& m);
SbnnModel model_from_json(const json& j);

json config_to_json(const SbnnConfig& c);
SbnnConfig config_from_json(const json& j);

}  // namespace pairview::sbnn
