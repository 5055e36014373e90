#pragma once

#include "elr/analysis.hpp"
#include "elr/dataset.hpp"
#include "elr/losses.hpp"
#include "elr/model.hpp"
#include "elr/targets.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace elr {

enum class TrainMode { Ce, Kl, Elr, ElrPlus };

std::string to_string(TrainMode mode);
TrainMode train_mode_from_string(const std::string& s);

struct TrainConfig {
  TrainMode mode = TrainMode::Ce;
  ArchKind arch = ArchKind::Linear;
  Eigen::Index hidden = 16;  // MLP only
  double init_radius = 2.0;

  double eta = 0.1;
  int epochs = 100;
  Eigen::Index batch_size = 0;  // 0 = full batch
  double lambda = 0.0;
  double beta = 0.7;    // temporal ensembling momentum
  double gamma = 0.0;   // weight averaging momentum (ELR+)
  double alpha_mixup = 1.0;
  bool mixup = true;               // ELR+ only; off collapses to ell' = 1, partner = self
  std::int64_t ramp_steps = 0;     // 0 = no lambda ramp-up
  bool refine_labels = false;
  bool freeze_targets_uniform = false;  // diagnostic: hold targets at 1/C
  bool tie_networks = false;            // diagnostic: both ELR+ networks share the init seed
  std::uint64_t seed = 0;
  int metric_every = 1;

  void validate() const;  // throws std::invalid_argument on a bad field
};

// One row of the run log. Record 0 is the initial state; record t holds the
// state after t optimizer epochs. grad_corr_v refers to the full-batch
// gradient evaluated AT this record's parameters (the one the next step
// applies), so pre-T steps are records 0 .. T-1.
struct EpochRecord {
  int epoch = 0;
  double loss_ce = 0.0;
  double loss_reg = 0.0;  // lambda-weighted contribution, so Ce and lambda=0 runs log 0
  double loss_total = 0.0;
  Breakdown acc;
  double kappa_sq_clean = 0.0;  // binary linear runs only, else 0
  double kappa_sq_wrong = 0.0;
  double grad_corr_v = 0.0;
  double theta_dot_v = 0.0;
  double target_match_observed = 0.0;
  double target_match_true = 0.0;
  double target_match_observed_wrong = 0.0;  // agreement with observed labels on the wrong set
  double ell_prime_mean = 1.0;               // mixup mixing weight average (ELR+)
};

struct RunLog {
  std::vector<EpochRecord> records;
  bool diverged = false;
  int diverged_epoch = -1;
  ModelParams final_params;
  Eigen::MatrixXd final_targets;  // n x C target table at the end of the run
  // FNV-1a of the raw weight bytes after each epoch (index 0 = init).
  // Lets reduction tests assert bit-level trajectory identity cheaply.
  std::vector<std::uint64_t> weight_hashes;

  const EpochRecord& last() const { return records.back(); }
};

// Algorithm-1 style loop for Ce / Kl / Elr: per batch, forward -> target
// update -> coefficient -> gradient -> SGD step. Targets are tracked in every
// mode (Ce runs log their agreement too). Deterministic given (config, data).
RunLog train(const TrainConfig& config, const NoisyDataset& data);

// Two networks with independent inits. Each batch: mixup, own weight-average
// update, targets from the OTHER network's averaged weights on the un-mixed
// inputs, loss on the mixed triplet. Logged accuracy metrics use the
// ensembled (mean) softmax outputs of both networks.
std::pair<RunLog, RunLog> train_elr_plus(const TrainConfig& config, const NoisyDataset& data);

}  // namespace elr
