#include "train.hpp"

#include <chrono>
#include <cmath>

#include "errors.hpp"

namespace gfs {

void TrainConfig::validate() const {
  if (lr_pretrain <= 0 || lr_joint <= 0) throw InvalidArgument("learning rates must be positive");
  if (epochs_pretrain == 0 || epochs_joint == 0) throw InvalidArgument("epochs must be positive");
  if (batch < 2) throw InvalidArgument("batch must be >= 2");
  if (n_pretrain_samples < batch || n_joint_samples < batch)
    throw InvalidArgument("sample pools must hold at least one batch");
  if (n_active_min < 1 || n_active_min > n_active_max)
    throw InvalidArgument("bad n_active range");
}

TrainConfig train_preset(const std::string& name) {
  TrainConfig cfg;
  if (name == "paper") {
    // Published recipe: 5e5 / 5e6 sample pools, 50 epochs, lr 1e-3 / 1e-4.
    return cfg;
  }
  if (name == "desk") {
    // Single-core CPU reduction: small batches keep the step count high
    // enough (~2000 joint steps) to clear the constant-predictor plateau.
    cfg.batch = 250;
    cfg.epochs_pretrain = 4;
    cfg.epochs_joint = 16;
    cfg.n_pretrain_samples = 50000;
    cfg.n_joint_samples = 50000;
    cfg.lr_joint = 0.002;
    return cfg;
  }
  if (name == "micro") {
    // Test-suite scale.
    cfg.epochs_pretrain = 2;
    cfg.epochs_joint = 2;
    cfg.batch = 100;
    cfg.n_pretrain_samples = 500;
    cfg.n_joint_samples = 500;
    cfg.lr_joint = 0.001;
    return cfg;
  }
  throw InvalidArgument("unknown preset '" + name + "'");
}

SimConfig sim_config_for(const TrainConfig& cfg, const CtuMap& map,
                         const PreambleSet& set, const CodebookSet& cbs) {
  SimConfig sim;
  sim.n_r = map.size();
  sim.J = map.J;
  sim.K = cbs.K;
  sim.N = cbs.N;
  sim.M = cbs.M;
  sim.n_zc = set.n_zc;
  sim.snr_db = cfg.snr_db_train;
  sim.activity_mode = ActivityMode::kFixedCount;
  sim.n_active_min = cfg.n_active_min;
  sim.n_active_max = cfg.n_active_max;
  sim.seed = cfg.seed;
  return sim;
}

DataSource online_data_source(SimConfig sim_cfg, const CtuMap& map,
                              const PreambleSet& set, const CodebookSet& cbs,
                              uint32_t batch_size, uint64_t seed) {
  sim_cfg.validate();
  // Copies keep the source self-contained; epoch-indexed substreams give
  // fresh noise and bits every epoch.
  return [sim_cfg, map, set, cbs, batch_size, seed](uint32_t epoch,
                                                    uint32_t idx) {
    Rng rng = Rng(seed, stream_domain::kTraining).substream(epoch).substream(idx);
    return generate_batch(sim_cfg, map, set, cbs, batch_size, rng);
  };
}

namespace {

struct StageRunner {
  ModelBundle<float>& bundle;
  const TrainConfig& cfg;
  const DataSource& source;
  uint64_t pool;
  uint32_t epochs;

  // step(tensors) returns the batch loss.
  template <typename Step>
  std::vector<double> run(Step&& step) {
    const uint32_t batches =
        static_cast<uint32_t>(std::max<uint64_t>(1, pool / cfg.batch));
    std::vector<double> losses;
    for (uint32_t e = 0; e < epochs; ++e) {
      double acc = 0.0;
      for (uint32_t i = 0; i < batches; ++i) {
        TransmissionBatch raw = source(e, i);
        BatchTensors t = to_tensors(raw, bundle.uaen_spec.n_d, bundle.uaen_spec.K);
        acc += step(t);
      }
      losses.push_back(acc / batches);
    }
    return losses;
  }
};

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

TrainReport pretrain_uaen(ModelBundle<float>& bundle, const TrainConfig& cfg,
                          const DataSource& source) {
  cfg.validate();
  if (bundle.kind != ModelKind::kProposedDaudn)
    throw InvalidArgument("pretraining requires a proposed_daudn bundle");
  const double t0 = now_seconds();
  Adam<float> adam(bundle.store.trainable("uaen."),
                   static_cast<float>(cfg.lr_pretrain));
  TrainReport report;
  StageRunner runner{bundle, cfg, source, cfg.n_pretrain_samples,
                     cfg.epochs_pretrain};
  report.pretrain_losses = runner.run([&](BatchTensors& t) {
    Tape<float> tape;
    auto y_d = tape.constant(std::move(t.y_d_packed));
    auto alpha = bundle.uaen_forward(tape, y_d, t.batch, /*training=*/true);
    auto loss = tape.bce_loss(alpha, t.labels);
    double value = tape.val(loss).v[0];
    tape.backward(loss);
    adam.step();
    return value;
  });
  report.total_steps = adam.steps();
  report.wall_seconds = now_seconds() - t0;
  report.stage = bundle.stage = "pretrained";
  return report;
}

TrainReport joint_train(ModelBundle<float>& bundle, const TrainConfig& cfg,
                        const DataSource& source, bool force,
                        bool freeze_uaen) {
  cfg.validate();
  if (bundle.kind != ModelKind::kProposedDaudn)
    throw InvalidArgument("joint training requires a proposed_daudn bundle");
  if (!force && !freeze_uaen && bundle.stage != "pretrained")
    throw InvalidArgument("bundle is not pretrained (stage '" + bundle.stage +
                          "'); pass force to override");
  const double t0 = now_seconds();
  auto params = freeze_uaen ? bundle.store.trainable("audn.")
                            : bundle.store.trainable();
  Adam<float> adam(params, static_cast<float>(cfg.lr_joint));
  // With a frozen UAEN its parameters must not move; mark them non-trainable
  // for the duration so the tape skips their gradients too.
  std::vector<Param<float>*> frozen;
  if (freeze_uaen) {
    for (auto* p : bundle.store.trainable("uaen.")) {
      p->trainable = false;
      frozen.push_back(p);
    }
  }
  TrainReport report;
  StageRunner runner{bundle, cfg, source, cfg.n_joint_samples, cfg.epochs_joint};
  report.joint_losses = runner.run([&](BatchTensors& t) {
    Tape<float> tape;
    auto y_p = tape.constant(std::move(t.y_p));
    auto y_d = tape.constant(std::move(t.y_d_packed));
    auto eta = bundle.forward(tape, y_p, y_d, t.batch, /*training=*/true);
    auto loss = tape.bce_loss(eta, t.labels);
    double value = tape.val(loss).v[0];
    tape.backward(loss);
    adam.step();
    return value;
  });
  for (auto* p : frozen) p->trainable = true;
  report.total_steps = adam.steps();
  report.wall_seconds = now_seconds() - t0;
  report.stage = bundle.stage = "joint";
  return report;
}

TrainReport train_baseline(ModelBundle<float>& bundle, const TrainConfig& cfg,
                           const DataSource& source) {
  cfg.validate();
  if (bundle.kind == ModelKind::kProposedDaudn)
    throw InvalidArgument("train_baseline expects paudn or conventional_daudn");
  const double t0 = now_seconds();
  Adam<float> adam(bundle.store.trainable(), static_cast<float>(cfg.lr_joint));
  TrainReport report;
  StageRunner runner{bundle, cfg, source, cfg.n_joint_samples, cfg.epochs_joint};
  report.joint_losses = runner.run([&](BatchTensors& t) {
    Tape<float> tape;
    auto y_p = tape.constant(std::move(t.y_p));
    auto y_d = tape.constant(std::move(t.y_d_packed));
    auto eta = bundle.forward(tape, y_p, y_d, t.batch, /*training=*/true);
    auto loss = tape.bce_loss(eta, t.labels);
    double value = tape.val(loss).v[0];
    tape.backward(loss);
    adam.step();
    return value;
  });
  report.total_steps = adam.steps();
  report.wall_seconds = now_seconds() - t0;
  report.stage = bundle.stage = "trained";
  return report;
}

double evaluate_loss(ModelBundle<float>& bundle, const DataSource& source,
                     uint32_t n_batches, uint32_t n_d, uint32_t K) {
  double acc = 0.0;
  for (uint32_t i = 0; i < n_batches; ++i) {
    TransmissionBatch raw = source(0, i);
    BatchTensors t = to_tensors(raw, n_d, K);
    Tape<float> tape;
    auto y_p = tape.constant(std::move(t.y_p));
    auto y_d = tape.constant(std::move(t.y_d_packed));
    auto eta = bundle.forward(tape, y_p, y_d, t.batch, /*training=*/false);
    auto loss = tape.bce_loss(eta, t.labels);
    acc += tape.val(loss).v[0];
  }
  return acc / n_batches;
}

}  // namespace gfs
