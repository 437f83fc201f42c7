#pragma once

#include <functional>
#include <string>
#include <vector>

#include "features.hpp"
#include "models.hpp"
#include "sim.hpp"

namespace gfs {

struct TrainConfig {
  double lr_pretrain = 0.001;
  double lr_joint = 0.0001;
  uint32_t epochs_pretrain = 50;
  uint32_t epochs_joint = 50;
  uint32_t batch = 1000;
  uint64_t n_pretrain_samples = 500000;
  uint64_t n_joint_samples = 5000000;
  double snr_db_train = 20.0;
  uint32_t n_active_min = 1, n_active_max = 6;
  uint64_t seed = 1;

  void validate() const;
};

// Named presets for the training recipe; "paper" carries the published
// sample budgets, "desk" is a single-core-feasible reduction.
TrainConfig train_preset(const std::string& name);

struct TrainReport {
  std::vector<double> pretrain_losses;  // one per epoch
  std::vector<double> joint_losses;
  double wall_seconds = 0.0;
  uint64_t total_steps = 0;
  std::string stage;
};

// Yields the generated batch for (epoch, batch_index); deterministic in the
// seed and indices.
using DataSource = std::function<TransmissionBatch(uint32_t epoch, uint32_t idx)>;

DataSource online_data_source(SimConfig sim_cfg, const CtuMap& map,
                              const PreambleSet& set, const CodebookSet& cbs,
                              uint32_t batch_size, uint64_t seed);

SimConfig sim_config_for(const TrainConfig& cfg, const CtuMap& map,
                         const PreambleSet& set, const CodebookSet& cbs);

// Stage one: minimize the self-supervised UAEN loss; AUDN parameters and the
// optimizer never see non-UAEN tensors.
TrainReport pretrain_uaen(ModelBundle<float>& bundle, const TrainConfig& cfg,
                          const DataSource& source);

// Stage two: minimize the end-to-end BCE over all parameters. Requires the
// pretrained stage tag unless force is set.
TrainReport joint_train(ModelBundle<float>& bundle, const TrainConfig& cfg,
                        const DataSource& source, bool force = false,
                        bool freeze_uaen = false);

TrainReport train_baseline(ModelBundle<float>& bundle, const TrainConfig& cfg,
                           const DataSource& source);

// Mean loss of the current parameters over n_batches fresh batches
// (inference-mode forward).
double evaluate_loss(ModelBundle<float>& bundle, const DataSource& source,
                     uint32_t n_batches, uint32_t n_d, uint32_t K);

}  // namespace gfs
