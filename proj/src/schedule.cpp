#include "pairview/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pairview/errors.hpp"
#include "pairview/eval.hpp"
#include "pairview/numerics.hpp"
#include "pairview/rng.hpp"

namespace pairview::schedule {

using sbnn::SbnnModel;

json schedule_to_json(const TrainSchedule& s) {
  return json{{"pretrain_epochs", s.pretrain_epochs},
              {"pretrain_val_fraction", s.pretrain_val_fraction},
              {"k_clusters", s.k_clusters},
              {"frozen_epochs", s.frozen_epochs},
              {"unfrozen_epochs", s.unfrozen_epochs},
              {"prune_to", s.prune_to},
              {"postprune_epochs", s.postprune_epochs},
              {"lr_initial", s.lr_initial},
              {"lr_reduced", s.lr_reduced},
              {"batch_size", s.batch_size},
              {"frozen_layer_count", s.frozen_layer_count}};
}

TrainSchedule schedule_from_json(const json& j) {
  TrainSchedule s;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("pretrain_epochs", s.pretrain_epochs);
  get("pretrain_val_fraction", s.pretrain_val_fraction);
  get("k_clusters", s.k_clusters);
  get("frozen_epochs", s.frozen_epochs);
  get("unfrozen_epochs", s.unfrozen_epochs);
  get("prune_to", s.prune_to);
  get("postprune_epochs", s.postprune_epochs);
  get("lr_initial", s.lr_initial);
  get("lr_reduced", s.lr_reduced);
  get("batch_size", s.batch_size);
  get("frozen_layer_count", s.frozen_layer_count);
  if (s.pretrain_val_fraction <= 0 || s.pretrain_val_fraction >= 1)
    throw ArgumentError("schedule: pretrain_val_fraction must be in (0, 1)");
  if (s.prune_to < 1) throw ArgumentError("schedule: prune_to must be >= 1");
  return s;
}

namespace {

std::string csv_num(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::vector<Eigen::Index>> make_batches(Eigen::Index n, int batch_size, Rng& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  rng.shuffle(idx);
  std::vector<std::vector<Eigen::Index>> batches;
  for (std::size_t start = 0; start < idx.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(idx.size(), start + static_cast<std::size_t>(batch_size));
    batches.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(start),
                         idx.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

Matrix take_rows(const Matrix& m, const std::vector<Eigen::Index>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

}  // namespace

std::string TrainHistory::to_csv_string() const {
  std::ostringstream out;
  out << "epoch,phase,lr,mse_allo,mse_recon,cross_entropy,val_cross_entropy,"
         "group_lasso,penalized_loss,monitor_r2,event\n";
  for (const EpochRecord& r : records) {
    out << r.epoch << ',' << r.phase << ',' << csv_num(r.lr) << ',' << csv_num(r.mse_allo) << ','
        << csv_num(r.mse_recon) << ',' << csv_num(r.cross_entropy) << ','
        << csv_num(r.val_cross_entropy) << ',' << csv_num(r.group_lasso_term) << ','
        << csv_num(r.penalized_loss) << ',' << csv_num(r.monitor_r2) << ',' << r.event << '\n';
  }
  return out.str();
}

void TrainHistory::to_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << to_csv_string();
}

const EpochRecord* TrainHistory::find_event(const std::string& event) const {
  for (const EpochRecord& r : records)
    if (r.event == event) return &r;
  return nullptr;
}

TrainHistory pretrain(SbnnModel& model, const Matrix& x, const Matrix& y,
                      const TrainSchedule& sched, std::uint64_t seed) {
  if (model.head_mode != sbnn::HeadMode::Classification)
    throw ArgumentError("pretrain: model must be in classification mode");
  const Eigen::Index n = x.rows();
  if (sched.k_clusters > n) throw ArgumentError("pretrain: k_clusters > n");
  if (model.n_classes != sched.k_clusters)
    throw ArgumentError("pretrain: model head has wrong class count");

  TrainHistory hist;
  if (sched.pretrain_epochs == 0) return hist;

  const auto km = num::kmeans(y, sched.k_clusters, seed);

  // Seeded validation split, stratified by cluster when every class has >= 2
  // members.
  Rng split_rng(Rng::mix(seed, 0x76616c));
  std::vector<int> counts(static_cast<std::size_t>(sched.k_clusters), 0);
  for (int lbl : km.labels) ++counts[static_cast<std::size_t>(lbl)];
  const bool stratify = *std::min_element(counts.begin(), counts.end()) >= 2;

  std::vector<Eigen::Index> val_idx, train_idx;
  if (stratify) {
    for (int c = 0; c < sched.k_clusters; ++c) {
      std::vector<Eigen::Index> members;
      for (Eigen::Index i = 0; i < n; ++i)
        if (km.labels[static_cast<std::size_t>(i)] == c) members.push_back(i);
      split_rng.shuffle(members);
      const std::size_t nval = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::floor(sched.pretrain_val_fraction *
                                                 static_cast<double>(members.size()) + 0.5)));
      for (std::size_t i = 0; i < members.size(); ++i)
        (i < nval ? val_idx : train_idx).push_back(members[i]);
    }
  } else {
    std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    split_rng.shuffle(all);
    const std::size_t nval =
        static_cast<std::size_t>(std::floor(sched.pretrain_val_fraction * static_cast<double>(n)));
    for (std::size_t i = 0; i < all.size(); ++i) (i < nval ? val_idx : train_idx).push_back(all[i]);
  }
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  const Matrix x_train = take_rows(x, train_idx);
  const Matrix x_val = take_rows(x, val_idx);
  std::vector<int> lbl_train, lbl_val;
  for (Eigen::Index i : train_idx) lbl_train.push_back(km.labels[static_cast<std::size_t>(i)]);
  for (Eigen::Index i : val_idx) lbl_val.push_back(km.labels[static_cast<std::size_t>(i)]);

  sbnn::Snapshot best = sbnn::take_snapshot(model);
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0;

  for (int epoch = 1; epoch <= sched.pretrain_epochs; ++epoch) {
    Rng batch_rng(Rng::mix(seed, 0x700000000ULL + static_cast<std::uint64_t>(epoch)));
    const auto batches = make_batches(x_train.rows(), sched.batch_size, batch_rng);
    double sum_total = 0, sum_ce = 0, sum_gl = 0;
    Eigen::Index seen = 0;
    for (const auto& batch : batches) {
      const Matrix xb = take_rows(x_train, batch);
      std::vector<int> lb;
      for (Eigen::Index i : batch) lb.push_back(lbl_train[static_cast<std::size_t>(i)]);
      try {
        auto [lt, g] = sbnn::loss_and_gradients_classification(model, xb, lb);
        sbnn::adam_step(model, g, sched.lr_initial);
        sum_total += lt.total * static_cast<double>(batch.size());
        sum_ce += lt.cross_entropy * static_cast<double>(batch.size());
        sum_gl += lt.group_lasso * static_cast<double>(batch.size());
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (pretrain epoch " + std::to_string(epoch) + ")");
      }
      seen += static_cast<Eigen::Index>(batch.size());
    }
    const double val_ce = sbnn::cross_entropy(model, x_val, lbl_val);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.phase = "pretrain";
    rec.lr = sched.lr_initial;
    rec.cross_entropy = sum_ce / static_cast<double>(seen);
    rec.group_lasso_term = sum_gl / static_cast<double>(seen);
    rec.penalized_loss = sum_total / static_cast<double>(seen);
    rec.val_cross_entropy = val_ce;
    hist.records.push_back(rec);

    if (val_ce < best_val) {
      best_val = val_ce;
      best = sbnn::take_snapshot(model);
      best_epoch = epoch;
    }
  }

  sbnn::restore_snapshot(model, best);
  if (!hist.records.empty()) {
    hist.records.back().event = "restore_best:" + std::to_string(best_epoch);
  }
  return hist;
}

TrainHistory train_main(SbnnModel& model, const Matrix& train_x, const Matrix& train_y,
                        const TrainSchedule& sched, std::uint64_t seed, const Matrix* monitor_x,
                        const Matrix* monitor_y) {
  if (model.head_mode != sbnn::HeadMode::RegressionReconstruction)
    throw ArgumentError("train_main: model must be in regression mode");

  TrainHistory hist;
  const Vector train_means = train_y.colwise().mean();

  const int total_epochs = sched.frozen_epochs + sched.unfrozen_epochs + sched.postprune_epochs;
  const int unfreeze_at = sched.frozen_epochs;
  const int prune_at = sched.frozen_epochs + sched.unfrozen_epochs;

  // Freeze the bottom encoder layers for phase 1.
  std::vector<int> bottom;
  for (int i = 0; i < sched.frozen_layer_count && i < static_cast<int>(model.encoder.size()); ++i)
    bottom.push_back(i);
  if (sched.frozen_epochs > 0) sbnn::set_frozen(model, bottom, true);

  auto maybe_unfreeze = [&](int epoch) {
    if (epoch == unfreeze_at) {
      sbnn::set_frozen(model, bottom, false);
      return true;
    }
    return false;
  };
  auto maybe_prune = [&](int epoch) {
    if (epoch == prune_at) {
      if (sched.prune_to <= model.input_dim) sbnn::prune_inputs(model, sched.prune_to);
      return true;
    }
    return false;
  };

  if (total_epochs == 0) {
    // Degenerate schedule: events only.
    if (unfreeze_at == 0 && sched.frozen_epochs > 0) sbnn::set_frozen(model, bottom, false);
    if (sched.prune_to < model.input_dim) {
      // no epochs scheduled: leave the model untouched
    }
    return hist;
  }

  for (int epoch = 1; epoch <= total_epochs; ++epoch) {
    const bool frozen_phase = epoch <= sched.frozen_epochs;
    const bool post_prune = epoch > prune_at;
    const double lr = frozen_phase ? sched.lr_initial : sched.lr_reduced;
    const std::optional<double> gl_override =
        post_prune ? std::optional<double>(0.0) : std::nullopt;
    const std::string phase = frozen_phase ? "frozen" : (post_prune ? "postprune" : "unfrozen");

    Rng batch_rng(Rng::mix(seed, 0x4d000000000ULL + static_cast<std::uint64_t>(epoch)));
    const auto batches = make_batches(train_x.rows(), sched.batch_size, batch_rng);
    double sum_total = 0, sum_allo = 0, sum_recon = 0, sum_gl = 0;
    Eigen::Index seen = 0;
    for (const auto& batch : batches) {
      Matrix xb_full = take_rows(train_x, batch);
      // After pruning, the model consumes (and reconstructs) survivors only.
      Matrix xb(xb_full.rows(), model.input_dim);
      if (model.input_dim == train_x.cols()) {
        xb = xb_full;
      } else {
        for (int j = 0; j < model.input_dim; ++j)
          xb.col(j) = xb_full.col(model.surviving_inputs[static_cast<std::size_t>(j)]);
      }
      const Matrix yb = take_rows(train_y, batch);
      try {
        auto [lt, g] = sbnn::loss_and_gradients(model, xb, yb, gl_override);
        sbnn::adam_step(model, g, lr);
        sum_total += lt.total * static_cast<double>(batch.size());
        sum_allo += lt.mse_allo * static_cast<double>(batch.size());
        sum_recon += lt.mse_recon * static_cast<double>(batch.size());
        sum_gl += lt.group_lasso * static_cast<double>(batch.size());
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ")");
      }
      seen += static_cast<Eigen::Index>(batch.size());
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.phase = phase;
    rec.lr = lr;
    rec.mse_allo = sum_allo / static_cast<double>(seen);
    rec.mse_recon = sum_recon / static_cast<double>(seen);
    rec.group_lasso_term = sum_gl / static_cast<double>(seen);
    rec.penalized_loss = sum_total / static_cast<double>(seen);

    if (monitor_x && monitor_y) {
      Matrix mon(monitor_x->rows(), model.input_dim);
      if (model.input_dim == monitor_x->cols()) {
        mon = *monitor_x;
      } else {
        for (int j = 0; j < model.input_dim; ++j)
          mon.col(j) = monitor_x->col(model.surviving_inputs[static_cast<std::size_t>(j)]);
      }
      const auto fr = sbnn::forward(model, mon);
      rec.monitor_r2 = eval::r2_multivariate(*monitor_y, fr.y_pred, train_means);
    }

    if (maybe_unfreeze(epoch)) rec.event = "unfreeze";
    if (maybe_prune(epoch)) rec.event = rec.event.empty() ? "prune" : rec.event + "+prune";
    hist.records.push_back(rec);
  }
  return hist;
}

PipelineResult full_pipeline(const data::PairedDataset& dataset, const sbnn::SbnnConfig& config,
                             const TrainSchedule& sched, std::uint64_t seed,
                             const Matrix* monitor_x, const Matrix* monitor_y) {
  const int p = static_cast<int>(dataset.p());
  const int q = static_cast<int>(dataset.q());
  if (sched.prune_to > p) throw ArgumentError("full_pipeline: prune_to > p");

  sbnn::SbnnConfig cfg = config;
  cfg.seed = seed;
  PipelineResult out;
  out.model = sbnn::build_network(cfg, p, q);

  if (sched.pretrain_epochs > 0) {
    sbnn::swap_head(out.model, sbnn::HeadMode::Classification, sched.k_clusters);
    TrainHistory pre = pretrain(out.model, dataset.x, dataset.y, sched, seed);
    out.history.records.insert(out.history.records.end(), pre.records.begin(),
                               pre.records.end());
    sbnn::swap_head(out.model, sbnn::HeadMode::RegressionReconstruction);
    if (!out.history.records.empty()) {
      EpochRecord swap_rec;
      swap_rec.epoch = out.history.records.back().epoch;
      swap_rec.phase = "pretrain";
      swap_rec.event = "head_swap";
      out.history.records.push_back(swap_rec);
    }
  }

  TrainHistory main = train_main(out.model, dataset.x, dataset.y, sched, seed, monitor_x, monitor_y);
  out.history.records.insert(out.history.records.end(), main.records.begin(), main.records.end());

  for (int idx : out.model.surviving_inputs)
    out.selected_features.push_back(dataset.x_names[static_cast<std::size_t>(idx)]);
  return out;
}

}  // namespace pairview::schedule
