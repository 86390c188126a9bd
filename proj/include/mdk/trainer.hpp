#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mdk/adam.hpp"
#include "mdk/dvc.hpp"
#include "mdk/losses.hpp"
#include "mdk/model.hpp"
#include "mdk/synthdomain.hpp"

namespace mdk {

struct TrainConfig {
  Variant variant = Variant::kBase;
  int epochs = 240;  // iota
  int kappa = 80;
  int tau = 5;
  double rho_max = 0.5;
  double lambda = 1.0;
  int batch_size = 16;
  double learning_rate = 3e-4;
  std::uint64_t seed = 1;
  int eval_every = 20;
  std::string checkpoint_path;  // run output directory
  std::string dataset_path;
  int C = 16;  // backbone channels
  int d = 32;  // parameterizer latent width

  ScheduleConfig schedule() const;
  void validate() const;
  // Everything except the filesystem paths; what checkpoints snapshot.
  bool same_semantics(const TrainConfig& o) const;
};

// The full mutable state of one training run.
struct TrainerSession {
  TrainConfig cfg;
  int num_domains = 0;
  ModelParams params;
  ModelState state;
  AdamState adam;
  std::map<std::string, LabelState> labels;  // by image_id, vcl only
  int next_epoch = 0;
};

TrainerSession make_session(const TrainConfig& cfg, int num_domains);

struct EpochReport {
  int epoch = 0;
  double l_den = 0.0;  // means over batches
  double l_cls = 0.0;
  double total = 0.0;
  double l_den_median = 0.0;  // median over the epoch's batches
  int batches = 0;
  double alpha = 0.0;
  int windows_finalized = 0;
  double mean_target_peak = 0.0;  // mean over images of max target entry
};

struct DomainMetrics {
  int domain_id = 0;
  double mae = 0.0;
  double rmse = 0.0;
  int scenes = 0;
};

// One seeded-shuffled pass over the training set: forward, loss, backward,
// Adam step per batch; the virtual-label lifecycle for vcl. label_trace, when
// given, receives one CSV row per (epoch, image): target then raw prediction.
EpochReport train_epoch(TrainerSession& session, const Dataset& data, int epoch,
                        std::ostream* label_trace);

// Per-domain MAE/RMSE of integrated counts on the test split (running stats).
std::vector<DomainMetrics> evaluate(TrainerSession& session, const Dataset& data);

// Versioned JSON + base64 payloads; save -> load -> save is byte-identical.
void save_checkpoint(const std::string& path, const TrainerSession& session);
TrainerSession load_checkpoint(const std::string& path);

struct RunResult {
  std::vector<DomainMetrics> final_metrics;
  std::vector<EpochReport> epoch_reports;  // one per trained epoch
  std::string run_dir;
  std::string metrics_csv;
  std::string gamma_csv;
  std::string labels_csv;  // vcl only, else empty
  std::string final_checkpoint;
};

// Trains per the config, evaluating and checkpointing every eval_every epochs.
// resume_from restarts from a saved checkpoint and appends to the run's CSV
// artifacts; stop_after (when set) halts after that many total epochs, at an
// eval boundary, leaving a checkpoint to resume from.
RunResult run_experiment(const TrainConfig& cfg,
                         const std::string& resume_from = "",
                         std::optional<int> stop_after = std::nullopt);

}  // namespace mdk
