#include "pairview/sbnn.hpp"

#include <algorithm>
#include <cmath>

#include "pairview/errors.hpp"
#include "pairview/rng.hpp"

namespace pairview::sbnn {

namespace {

Matrix glorot_uniform(int in, int out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (in + out));
  Matrix w(in, out);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-limit, limit);
  return w;
}

Layer make_layer(int in, int out, Activation act, bool readout, Rng& rng) {
  Layer l;
  l.w = glorot_uniform(in, out, rng);
  l.b = Vector::Zero(out);
  l.act = act;
  l.readout = readout;
  l.adam.mw = Matrix::Zero(in, out);
  l.adam.vw = Matrix::Zero(in, out);
  l.adam.mb = Vector::Zero(out);
  l.adam.vb = Vector::Zero(out);
  return l;
}

Matrix apply_act(const Matrix& z, Activation act) {
  if (act == Activation::Linear) return z;
  return z.unaryExpr([](double v) { return v > 0 ? v : std::expm1(v); });
}

Matrix act_derivative(const Matrix& z, Activation act) {
  if (act == Activation::Linear) return Matrix::Ones(z.rows(), z.cols());
  return z.unaryExpr([](double v) { return v > 0 ? 1.0 : std::exp(v); });
}

// Forward through a stack; activations[0] is the input, activations[i+1] the
// output of layer i. Pre-activations cached for backprop.
void forward_stack(const std::vector<Layer>& layers, const Matrix& input,
                   std::vector<Matrix>& pre, std::vector<Matrix>& act) {
  pre.clear();
  act.clear();
  act.push_back(input);
  for (const Layer& l : layers) {
    Matrix z = act.back() * l.w;
    z.rowwise() += l.b.transpose();
    pre.push_back(z);
    act.push_back(apply_act(z, l.act));
  }
}

// Backprop through a stack given dL/d(output activation) (or dL/d(last
// pre-activation) when grad_is_dz). Returns dL/d(input).
Matrix backprop_stack(const std::vector<Layer>& layers, const std::vector<Matrix>& pre,
                      const std::vector<Matrix>& act, Matrix grad, bool grad_is_dz,
                      std::vector<LayerGrad>& out) {
  out.assign(layers.size(), {});
  for (int i = static_cast<int>(layers.size()) - 1; i >= 0; --i) {
    Matrix dz;
    if (grad_is_dz && i == static_cast<int>(layers.size()) - 1) {
      dz = std::move(grad);
    } else {
      dz = grad.cwiseProduct(act_derivative(pre[static_cast<std::size_t>(i)], layers[static_cast<std::size_t>(i)].act));
    }
    out[static_cast<std::size_t>(i)].w = act[static_cast<std::size_t>(i)].transpose() * dz;
    out[static_cast<std::size_t>(i)].b = dz.colwise().sum().transpose();
    grad = dz * layers[static_cast<std::size_t>(i)].w.transpose();
  }
  return grad;
}

double l2_term(const std::vector<Layer>& layers) {
  double s = 0;
  for (const Layer& l : layers) {
    s += l.w.squaredNorm();
    if (!l.readout) s += l.b.squaredNorm();
  }
  return s;
}

void add_l2_grads(const std::vector<Layer>& layers, double l2, std::vector<LayerGrad>& g) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    g[i].w += 2.0 * l2 * layers[i].w;
    if (!layers[i].readout) g[i].b += 2.0 * l2 * layers[i].b;
  }
}

void zero_frozen(const std::vector<Layer>& layers, std::vector<LayerGrad>& g) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].frozen) {
      g[i].w.setZero();
      g[i].b.setZero();
    }
  }
}

Rng fresh_rng(SbnnModel& m) { return Rng(Rng::mix(m.config.seed, ++m.init_counter)); }

}  // namespace

SbnnModel build_network(const SbnnConfig& config, int p, int q) {
  if (p < 1 || q < 1) throw ArgumentError("build_network: p, q must be >= 1");
  if (config.bottleneck < 1) throw ArgumentError("build_network: bottleneck must be >= 1");
  for (int s : config.encoder_sizes)
    if (s < 1) throw ArgumentError("build_network: encoder size < 1");
  for (int s : config.decoder_sizes)
    if (s < 1) throw ArgumentError("build_network: decoder size < 1");
  if (config.l2_penalty < 0 || config.group_lasso < 0 || config.recon_weight < 0)
    throw ArgumentError("build_network: penalties must be >= 0");

  SbnnModel m;
  m.config = config;
  m.input_dim = p;
  m.output_dim = q;
  m.surviving_inputs.resize(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) m.surviving_inputs[static_cast<std::size_t>(i)] = i;

  Rng rng(config.seed);
  int in = p;
  for (int size : config.encoder_sizes) {
    m.encoder.push_back(make_layer(in, size, Activation::Elu, false, rng));
    in = size;
  }
  m.encoder.push_back(make_layer(in, config.bottleneck, Activation::Linear, false, rng));

  auto build_head = [&](int out_dim) {
    std::vector<Layer> head;
    int hin = config.bottleneck;
    for (int size : config.decoder_sizes) {
      head.push_back(make_layer(hin, size, Activation::Elu, false, rng));
      hin = size;
    }
    head.push_back(make_layer(hin, out_dim, Activation::Linear, true, rng));
    return head;
  };
  m.allo = build_head(q);
  m.recon = build_head(p);
  return m;
}

ForwardResult forward(const SbnnModel& model, const Matrix& x_batch) {
  if (x_batch.cols() != model.input_dim)
    throw ArgumentError("forward: expected " + std::to_string(model.input_dim) +
                        " input columns, got " + std::to_string(x_batch.cols()));
  std::vector<Matrix> pre, act;
  forward_stack(model.encoder, x_batch, pre, act);
  ForwardResult r;
  r.latent = act.back();
  if (model.head_mode == HeadMode::RegressionReconstruction) {
    std::vector<Matrix> p2, a2;
    forward_stack(model.allo, r.latent, p2, a2);
    r.y_pred = a2.back();
    forward_stack(model.recon, r.latent, p2, a2);
    r.x_recon = a2.back();
  } else {
    std::vector<Matrix> p2, a2;
    forward_stack(model.cls, r.latent, p2, a2);
    Matrix logits = a2.back();
    r.probs.resize(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      const double mx = logits.row(i).maxCoeff();
      Eigen::ArrayXd e = (logits.row(i).array() - mx).exp();
      r.probs.row(i) = (e / e.sum()).matrix();
    }
  }
  return r;
}

std::pair<LossTerms, Gradients> loss_and_gradients(const SbnnModel& model, const Matrix& x_batch,
                                                   const Matrix& y_batch,
                                                   std::optional<double> group_lasso_override) {
  if (model.head_mode != HeadMode::RegressionReconstruction)
    throw ArgumentError("loss_and_gradients: model is in classification mode");
  if (x_batch.cols() != model.input_dim || y_batch.cols() != model.output_dim ||
      x_batch.rows() != y_batch.rows())
    throw ArgumentError("loss_and_gradients: batch shape mismatch");

  const double gl = group_lasso_override.value_or(model.config.group_lasso);
  const double l2 = model.config.l2_penalty;

  std::vector<Matrix> enc_pre, enc_act;
  forward_stack(model.encoder, x_batch, enc_pre, enc_act);
  const Matrix& latent = enc_act.back();

  std::vector<Matrix> allo_pre, allo_act, rec_pre, rec_act;
  forward_stack(model.allo, latent, allo_pre, allo_act);
  forward_stack(model.recon, latent, rec_pre, rec_act);
  const Matrix& y_pred = allo_act.back();
  const Matrix& x_recon = rec_act.back();

  LossTerms lt;
  const double ny = static_cast<double>(y_batch.size());
  const double nx = static_cast<double>(x_batch.size());
  lt.mse_allo = (y_pred - y_batch).squaredNorm() / ny;
  lt.mse_recon = (x_recon - x_batch).squaredNorm() / nx;
  lt.l2 = l2 * (l2_term(model.encoder) + l2_term(model.allo) + l2_term(model.recon));
  double gl_sum = 0;
  for (Eigen::Index i = 0; i < model.encoder[0].w.rows(); ++i)
    gl_sum += model.encoder[0].w.row(i).norm();
  lt.group_lasso = gl * gl_sum;
  lt.total = lt.mse_allo + model.config.recon_weight * lt.mse_recon + lt.l2 + lt.group_lasso;
  if (!std::isfinite(lt.total)) throw NumericError("loss_and_gradients: non-finite loss");

  Gradients g;
  const Matrix d_ypred = 2.0 * (y_pred - y_batch) / ny;
  const Matrix d_xrecon = 2.0 * model.config.recon_weight * (x_recon - x_batch) / nx;
  Matrix d_latent = backprop_stack(model.allo, allo_pre, allo_act, d_ypred, false, g.allo);
  d_latent += backprop_stack(model.recon, rec_pre, rec_act, d_xrecon, false, g.recon);
  backprop_stack(model.encoder, enc_pre, enc_act, d_latent, false, g.encoder);

  add_l2_grads(model.encoder, l2, g.encoder);
  add_l2_grads(model.allo, l2, g.allo);
  add_l2_grads(model.recon, l2, g.recon);
  // Group lasso on the first-layer rows; epsilon guard at zero rows.
  const Matrix& w1 = model.encoder[0].w;
  for (Eigen::Index i = 0; i < w1.rows(); ++i) {
    const double nrm = std::max(w1.row(i).norm(), 1e-12);
    g.encoder[0].w.row(i) += gl * w1.row(i) / nrm;
  }
  zero_frozen(model.encoder, g.encoder);
  zero_frozen(model.allo, g.allo);
  zero_frozen(model.recon, g.recon);
  return {lt, std::move(g)};
}

std::pair<LossTerms, Gradients> loss_and_gradients_classification(
    const SbnnModel& model, const Matrix& x_batch, const std::vector<int>& labels,
    std::optional<double> group_lasso_override) {
  if (model.head_mode != HeadMode::Classification)
    throw ArgumentError("loss_and_gradients_classification: model is in regression mode");
  if (static_cast<Eigen::Index>(labels.size()) != x_batch.rows())
    throw ArgumentError("loss_and_gradients_classification: label count mismatch");

  const double gl = group_lasso_override.value_or(model.config.group_lasso);
  const double l2 = model.config.l2_penalty;

  std::vector<Matrix> enc_pre, enc_act;
  forward_stack(model.encoder, x_batch, enc_pre, enc_act);
  std::vector<Matrix> cls_pre, cls_act;
  forward_stack(model.cls, enc_act.back(), cls_pre, cls_act);
  const Matrix& logits = cls_act.back();
  const Eigen::Index b = x_batch.rows();

  Matrix probs(logits.rows(), logits.cols());
  double ce = 0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const double mx = logits.row(i).maxCoeff();
    Eigen::ArrayXd e = (logits.row(i).array() - mx).exp();
    probs.row(i) = (e / e.sum()).matrix();
    ce -= std::log(std::max(probs(i, labels[static_cast<std::size_t>(i)]), 1e-300));
  }
  ce /= static_cast<double>(b);

  LossTerms lt;
  lt.cross_entropy = ce;
  lt.l2 = l2 * (l2_term(model.encoder) + l2_term(model.cls));
  double gl_sum = 0;
  for (Eigen::Index i = 0; i < model.encoder[0].w.rows(); ++i)
    gl_sum += model.encoder[0].w.row(i).norm();
  lt.group_lasso = gl * gl_sum;
  lt.total = lt.cross_entropy + lt.l2 + lt.group_lasso;
  if (!std::isfinite(lt.total)) throw NumericError("loss_and_gradients: non-finite loss");

  Gradients g;
  Matrix dz = probs;
  for (Eigen::Index i = 0; i < b; ++i) dz(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
  dz /= static_cast<double>(b);
  Matrix d_latent = backprop_stack(model.cls, cls_pre, cls_act, dz, true, g.cls);
  backprop_stack(model.encoder, enc_pre, enc_act, d_latent, false, g.encoder);

  add_l2_grads(model.encoder, l2, g.encoder);
  add_l2_grads(model.cls, l2, g.cls);
  const Matrix& w1 = model.encoder[0].w;
  for (Eigen::Index i = 0; i < w1.rows(); ++i) {
    const double nrm = std::max(w1.row(i).norm(), 1e-12);
    g.encoder[0].w.row(i) += gl * w1.row(i) / nrm;
  }
  zero_frozen(model.encoder, g.encoder);
  zero_frozen(model.cls, g.cls);
  return {lt, std::move(g)};
}

double cross_entropy(const SbnnModel& model, const Matrix& x, const std::vector<int>& labels) {
  ForwardResult r = forward(model, x);
  double ce = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    ce -= std::log(std::max(r.probs(i, labels[static_cast<std::size_t>(i)]), 1e-300));
  return ce / static_cast<double>(x.rows());
}

namespace {

void adam_update_stack(std::vector<Layer>& layers, const std::vector<LayerGrad>& grads,
                       double lr, double bc1, double bc2) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-7;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Layer& l = layers[i];
    if (l.frozen) continue;
    const LayerGrad& g = grads[i];
    l.adam.mw = beta1 * l.adam.mw + (1 - beta1) * g.w;
    l.adam.vw = beta2 * l.adam.vw + (1 - beta2) * g.w.cwiseProduct(g.w);
    l.adam.mb = beta1 * l.adam.mb + (1 - beta1) * g.b;
    l.adam.vb = beta2 * l.adam.vb + (1 - beta2) * g.b.cwiseProduct(g.b);
    l.w -= lr * ((l.adam.mw / bc1).array() / ((l.adam.vw / bc2).array().sqrt() + eps)).matrix();
    l.b -= lr * ((l.adam.mb / bc1).array() / ((l.adam.vb / bc2).array().sqrt() + eps)).matrix();
  }
}

}  // namespace

void adam_step(SbnnModel& model, const Gradients& grads, double lr) {
  if (lr <= 0) throw ArgumentError("adam_step: lr must be > 0");
  ++model.adam_t;
  const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(model.adam_t));
  const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(model.adam_t));
  adam_update_stack(model.encoder, grads.encoder, lr, bc1, bc2);
  if (model.head_mode == HeadMode::RegressionReconstruction) {
    adam_update_stack(model.allo, grads.allo, lr, bc1, bc2);
    adam_update_stack(model.recon, grads.recon, lr, bc1, bc2);
  } else {
    adam_update_stack(model.cls, grads.cls, lr, bc1, bc2);
  }
}

int layer_count(const SbnnModel& model) {
  int n = static_cast<int>(model.encoder.size());
  if (model.head_mode == HeadMode::RegressionReconstruction)
    n += static_cast<int>(model.allo.size() + model.recon.size());
  else
    n += static_cast<int>(model.cls.size());
  return n;
}

void set_frozen(SbnnModel& model, const std::vector<int>& layer_indices, bool frozen) {
  const int total = layer_count(model);
  for (int idx : layer_indices) {
    if (idx < 0 || idx >= total)
      throw ArgumentError("set_frozen: invalid layer index " + std::to_string(idx));
    const int e = static_cast<int>(model.encoder.size());
    if (idx < e) {
      model.encoder[static_cast<std::size_t>(idx)].frozen = frozen;
    } else if (model.head_mode == HeadMode::RegressionReconstruction) {
      const int a = static_cast<int>(model.allo.size());
      if (idx - e < a)
        model.allo[static_cast<std::size_t>(idx - e)].frozen = frozen;
      else
        model.recon[static_cast<std::size_t>(idx - e - a)].frozen = frozen;
    } else {
      model.cls[static_cast<std::size_t>(idx - e)].frozen = frozen;
    }
  }
}

std::vector<int> prune_inputs(SbnnModel& model, int k) {
  if (model.head_mode != HeadMode::RegressionReconstruction)
    throw ArgumentError("prune_inputs: model must be in regression mode");
  if (k < 1 || k > model.input_dim)
    throw ArgumentError("prune_inputs: k must be in [1, input count]");

  const Matrix& w1 = model.encoder[0].w;
  std::vector<int> order(static_cast<std::size_t>(model.input_dim));
  for (int i = 0; i < model.input_dim; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return w1.row(a).norm() > w1.row(b).norm();
  });
  std::vector<int> selected(order.begin(), order.begin() + k);
  std::sort(selected.begin(), selected.end());
  if (k == model.input_dim) return selected;  // no-op

  auto slice_rows = [&](const Matrix& m) {
    Matrix out(k, m.cols());
    for (int i = 0; i < k; ++i) out.row(i) = m.row(selected[static_cast<std::size_t>(i)]);
    return out;
  };
  Layer& first = model.encoder[0];
  first.w = slice_rows(first.w);
  first.adam.mw = slice_rows(first.adam.mw);
  first.adam.vw = slice_rows(first.adam.vw);

  // Autoencoder target becomes the surviving feature set.
  Layer& rl = model.recon.back();
  auto slice_cols = [&](const Matrix& m) {
    Matrix out(m.rows(), k);
    for (int j = 0; j < k; ++j) out.col(j) = m.col(selected[static_cast<std::size_t>(j)]);
    return out;
  };
  auto slice_vec = [&](const Vector& v) {
    Vector out(k);
    for (int j = 0; j < k; ++j) out(j) = v(selected[static_cast<std::size_t>(j)]);
    return out;
  };
  rl.w = slice_cols(rl.w);
  rl.adam.mw = slice_cols(rl.adam.mw);
  rl.adam.vw = slice_cols(rl.adam.vw);
  rl.b = slice_vec(rl.b);
  rl.adam.mb = slice_vec(rl.adam.mb);
  rl.adam.vb = slice_vec(rl.adam.vb);

  std::vector<int> composed;
  for (int idx : selected)
    composed.push_back(model.surviving_inputs[static_cast<std::size_t>(idx)]);
  model.surviving_inputs = std::move(composed);
  model.input_dim = k;
  return selected;
}

void swap_head(SbnnModel& model, HeadMode mode, std::optional<int> n_classes) {
  if (mode == model.head_mode) return;
  Rng rng = fresh_rng(model);
  if (mode == HeadMode::Classification) {
    if (!n_classes || *n_classes < 2)
      throw ArgumentError("swap_head: classification mode requires n_classes >= 2");
    model.stashed_allo = std::move(model.allo);
    model.stashed_recon = std::move(model.recon);
    model.allo.clear();
    model.recon.clear();
    model.cls = {make_layer(model.config.bottleneck, *n_classes, Activation::Linear, true, rng)};
    model.n_classes = *n_classes;
  } else {
    auto restore_head = [&](std::vector<Layer>& stash, int out_dim) {
      std::vector<Layer> head;
      int in = model.config.bottleneck;
      if (!stash.empty()) {
        head.assign(stash.begin(), stash.end() - 1);  // keep hidden layers
        for (Layer& l : head) l.frozen = false;
        in = static_cast<int>(head.empty() ? model.config.bottleneck : head.back().w.cols());
      } else {
        for (int size : model.config.decoder_sizes) {
          head.push_back(make_layer(in, size, Activation::Elu, false, rng));
          in = size;
        }
      }
      head.push_back(make_layer(in, out_dim, Activation::Linear, true, rng));
      stash.clear();
      return head;
    };
    model.allo = restore_head(model.stashed_allo, model.output_dim);
    model.recon = restore_head(model.stashed_recon, model.input_dim);
    model.cls.clear();
    model.n_classes = 0;
  }
  model.head_mode = mode;
}

Snapshot take_snapshot(const SbnnModel& model) {
  Snapshot s;
  auto grab = [&](const std::vector<Layer>& layers) {
    for (const Layer& l : layers) s.params.emplace_back(l.w, l.b);
  };
  grab(model.encoder);
  grab(model.allo);
  grab(model.recon);
  grab(model.cls);
  return s;
}

void restore_snapshot(SbnnModel& model, const Snapshot& s) {
  std::size_t k = 0;
  auto put = [&](std::vector<Layer>& layers) {
    for (Layer& l : layers) {
      l.w = s.params[k].first;
      l.b = s.params[k].second;
      ++k;
    }
  };
  put(model.encoder);
  put(model.allo);
  put(model.recon);
  put(model.cls);
  if (k != s.params.size()) throw ArgumentError("restore_snapshot: layer count mismatch");
}

namespace {

json layers_to_json(const std::vector<Layer>& layers) {
  json arr = json::array();
  for (const Layer& l : layers) {
    arr.push_back({{"w", matrix_to_json(l.w)},
                   {"b", vector_to_json(l.b)},
                   {"act", l.act == Activation::Elu ? "elu" : "linear"},
                   {"frozen", l.frozen},
                   {"readout", l.readout}});
  }
  return arr;
}

std::vector<Layer> layers_from_json(const json& arr) {
  std::vector<Layer> out;
  for (const auto& jl : arr) {
    Layer l;
    l.w = matrix_from_json(jl.at("w"));
    l.b = vector_from_json(jl.at("b"));
    l.act = jl.at("act").get<std::string>() == "elu" ? Activation::Elu : Activation::Linear;
    l.frozen = jl.at("frozen").get<bool>();
    l.readout = jl.at("readout").get<bool>();
    l.adam.mw = Matrix::Zero(l.w.rows(), l.w.cols());
    l.adam.vw = Matrix::Zero(l.w.rows(), l.w.cols());
    l.adam.mb = Vector::Zero(l.b.size());
    l.adam.vb = Vector::Zero(l.b.size());
    out.push_back(std::move(l));
  }
  return out;
}

}  // namespace

json config_to_json(const SbnnConfig& c) {
  return json{{"encoder_sizes", c.encoder_sizes}, {"bottleneck", c.bottleneck},
              {"decoder_sizes", c.decoder_sizes}, {"l2_penalty", c.l2_penalty},
              {"group_lasso", c.group_lasso},     {"recon_weight", c.recon_weight},
              {"seed", c.seed}};
}

SbnnConfig config_from_json(const json& j) {
  SbnnConfig c;
  if (j.contains("encoder_sizes")) c.encoder_sizes = j.at("encoder_sizes").get<std::vector<int>>();
  if (j.contains("bottleneck")) c.bottleneck = j.at("bottleneck").get<int>();
  if (j.contains("decoder_sizes")) c.decoder_sizes = j.at("decoder_sizes").get<std::vector<int>>();
  if (j.contains("l2_penalty")) c.l2_penalty = j.at("l2_penalty").get<double>();
  if (j.contains("group_lasso")) c.group_lasso = j.at("group_lasso").get<double>();
  if (j.contains("recon_weight")) c.recon_weight = j.at("recon_weight").get<double>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json model_to_json(const SbnnModel& m) {
  json j;
  j["kind"] = "sbnn";
  j["config"] = config_to_json(m.config);
  j["head_mode"] =
      m.head_mode == HeadMode::RegressionReconstruction ? "regression" : "classification";
  j["encoder"] = layers_to_json(m.encoder);
  j["allo"] = layers_to_json(m.allo);
  j["recon"] = layers_to_json(m.recon);
  j["cls"] = layers_to_json(m.cls);
  j["surviving_inputs"] = m.surviving_inputs;
  j["input_dim"] = m.input_dim;
  j["output_dim"] = m.output_dim;
  j["n_classes"] = m.n_classes;
  j["adam_step_count"] = m.adam_t;
  j["adam_moments_included"] = false;  // portable format is not resumable
  return j;
}

SbnnModel model_from_json(const json& j) {
  SbnnModel m;
  m.config = config_from_json(j.at("config"));
  m.head_mode = j.at("head_mode").get<std::string>() == "regression"
                    ? HeadMode::RegressionReconstruction
                    : HeadMode::Classification;
  m.encoder = layers_from_json(j.at("encoder"));
  m.allo = layers_from_json(j.at("allo"));
  m.recon = layers_from_json(j.at("recon"));
  m.cls = layers_from_json(j.at("cls"));
  m.surviving_inputs = j.at("surviving_inputs").get<std::vector<int>>();
  m.input_dim = j.at("input_dim").get<int>();
  m.output_dim = j.at("output_dim").get<int>();
  m.n_classes = j.at("n_classes").get<int>();
  m.adam_t = j.at("adam_step_count").get<long long>();
  return m;
}

}  // namespace pairview::sbnn
