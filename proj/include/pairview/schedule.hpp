#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pairview/data.hpp"
#include "pairview/sbnn.hpp"
#include "pairview/types.hpp"

namespace pairview::schedule {

struct TrainSchedule {
  int pretrain_epochs = 50;
  double pretrain_val_fraction = 0.40;
  int k_clusters = 20;
  int frozen_epochs = 50;
  int unfrozen_epochs = 50;
  int prune_to = 25;
  int postprune_epochs = 100;
  double lr_initial = 0.0001;
  double lr_reduced = 0.00005;
  int batch_size = 32;
  int frozen_layer_count = 2;
};

json schedule_to_json(const TrainSchedule& s);
TrainSchedule schedule_from_json(const json& j);

struct EpochRecord {
  int epoch = 0;  // cumulative within the phase group
  std::string phase;
  double lr = 0;
  double mse_allo = std::numeric_limits<double>::quiet_NaN();
  double mse_recon = std::numeric_limits<double>::quiet_NaN();
  double cross_entropy = std::numeric_limits<double>::quiet_NaN();
  double val_cross_entropy = std::numeric_limits<double>::quiet_NaN();
  double group_lasso_term = std::numeric_limits<double>::quiet_NaN();
  double penalized_loss = std::numeric_limits<double>::quiet_NaN();
  double monitor_r2 = std::numeric_limits<double>::quiet_NaN();
  std::string event;  // "", "freeze", "unfreeze", "prune", "head_swap", "restore_best"
};

struct TrainHistory {
  std::vector<EpochRecord> records;
  void to_csv(const std::string& path) const;
  std::string to_csv_string() const;
  // First record carrying the given event tag, or nullptr.
  const EpochRecord* find_event(const std::string& event) const;
};

// Classification pre-training: k-means labels on y, a seeded 40% validation
// split, up to pretrain_epochs epochs, then restores the weights from the
// epoch with the lowest unpenalized validation cross-entropy.
TrainHistory pretrain(sbnn::SbnnModel& model, const Matrix& x, const Matrix& y,
                      const TrainSchedule& sched, std::uint64_t seed);

// Frozen phase, unfrozen phase, prune event, post-prune fine-tuning with the
// group lasso off. Monitor set, when given, is scored with multivariate R^2
// each epoch.
TrainHistory train_main(sbnn::SbnnModel& model, const Matrix& train_x, const Matrix& train_y,
                        const TrainSchedule& sched, std::uint64_t seed,
                        const Matrix* monitor_x = nullptr, const Matrix* monitor_y = nullptr);

struct PipelineResult {
  sbnn::SbnnModel model;
  TrainHistory history;
  std::vector<std::string> selected_features;
};

// build -> pretrain (classification) -> head swap -> train_main. A monitor
// set, when given, is scored per epoch during the main phases.
PipelineResult full_pipeline(const data::PairedDataset& dataset, const sbnn::SbnnConfig& config,
                             const TrainSchedule& sched, std::uint64_t seed,
                             const Matrix* monitor_x = nullptr,
                             const Matrix* monitor_y = nullptr);

}  // namespace pairview::schedule
