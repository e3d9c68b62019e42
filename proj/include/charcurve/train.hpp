#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "charcurve/model.hpp"

namespace charcurve {

enum class TrainMode { kScratch, kFinetune };

struct TrainConfig {
  TrainMode mode = TrainMode::kScratch;
  // Scratch: lr = lr_scale * d_model^-0.5 * min(step^-0.5, step * warmup^-1.5).
  double lr_scale = 1.0;
  int warmup_steps = 400;
  // Finetune: constant rate. 1e-5 is the large-scale setting.
  double constant_lr = 1e-4;
  int batch_size = 32;  // sentence pairs per step
  int max_steps = 2000;
  int patience = 10;    // validation checks without improvement
  int eval_every = 100;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.98;
  double adam_eps = 1e-9;
  std::uint64_t seed = 1;

  // Throws kConfigInvalid.
  void validate() const;
  double learning_rate(int step, int d_model) const;  // step counts from 1
  bool operator==(const TrainConfig&) const = default;
};

std::string train_mode_name(TrainMode m);

struct TrainLogEntry {
  int step = 0;
  double train_loss = 0.0;  // mean over the steps since the previous check
  double valid_loss = 0.0;  // unsmoothed, dropout off
  bool improved = false;
  double sents_per_sec = 0.0;  // wall-clock; excluded from comparisons

  bool operator==(const TrainLogEntry& o) const {
    return step == o.step && train_loss == o.train_loss && valid_loss == o.valid_loss &&
           improved == o.improved;
  }
};

struct TrainLog {
  std::vector<TrainLogEntry> entries;
  int steps_run = 0;
  int best_step = 0;
  double best_valid = 0.0;
  bool stopped_early = false;
  double seconds = 0.0;        // wall-clock
  double sents_per_sec = 0.0;  // wall-clock

  bool operator==(const TrainLog& o) const {
    return entries == o.entries && steps_run == o.steps_run && best_step == o.best_step &&
           best_valid == o.best_valid && stopped_early == o.stopped_early;
  }
};

// Training pairs for a given epoch (0, 1, ...). Lets callers re-segment with
// fresh dropout draws each epoch.
using EpochProvider = std::function<std::vector<EncodedPair>(std::size_t epoch)>;

struct TrainResult {
  ToyModel model;  // best validation checkpoint
  TrainLog log;
};

// Adam with a fresh optimizer state. Validation loss is checked every
// eval_every steps and after the last step. Throws kEmptyCorpus.
TrainResult train(const ToyModel& init, const EpochProvider& data,
                  std::span<const EncodedPair> valid, const TrainConfig& cfg);

// Fixed training pairs.
TrainResult train(const ToyModel& init, std::span<const EncodedPair> pairs,
                  std::span<const EncodedPair> valid, const TrainConfig& cfg);

// Mean unsmoothed cross-entropy per target position.
double validation_loss(const ToyModel& model, std::span<const EncodedPair> valid,
                       std::size_t batch_size = 64);

// Pairs unit sequences line by line. Throws kMisalignedCorpus.
std::vector<EncodedPair> make_pairs(const ToyModel& model, std::span<const UnitSeq> src,
                                    std::span<const UnitSeq> tgt);

}  // namespace charcurve
