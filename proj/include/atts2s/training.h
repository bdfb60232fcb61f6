// atts2s/training.h

// Copyright 2026  The atts2s Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ATTS2S_TRAINING_H_
#define ATTS2S_TRAINING_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "atts2s/checkpoint.h"
#include "atts2s/losses.h"
#include "atts2s/model.h"

namespace atts2s {

struct TrainingConfig {
  int batch_size = 32;
  int epochs = 1000;
  double sigma_g = 0.4;
  LossWeights weights;
  double stop_pos_weight = kStopPositiveWeight;
  int warmup_steps = 4000;
  // 1e-3 at the end of the default warmup
  double base_lr_scale = 0.0632455532;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 1.0;
  int checkpoint_every = 10;
  std::uint64_t seed = 1;

  void Validate() const;
};

/// base_lr_scale * min(step^-1/2, step * warmup^-3/2). Throws IndexError for
/// step 0.
double LrAt(std::int64_t step, const TrainingConfig &cfg);

/// First and second moments in parameter order, plus the update count.
template <typename T>
struct AdamState {
  std::vector<Tensor<T>> m, v;
  std::int64_t step = 0;

  static AdamState ZerosLike(const ParameterSet<T> &params);
};

/// One bias-corrected Adam update with the gradients stored in `params`.
/// Increments state.step.
template <typename T>
void AdamStep(ParameterSet<T> &params, AdamState<T> &state, double lr,
              const TrainingConfig &cfg);

/// Rescales every gradient so the global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
template <typename T>
double ClipGradNorm(ParameterSet<T> &params, double max_norm);

/// Batch composition for one epoch: indices shuffled with `seed`, grouped
/// into buckets of similar source length, cut into batches, batch order
/// shuffled again.
std::vector<std::vector<std::size_t>> MakeBatches(const std::vector<ParallelPair> &pairs,
                                                  int batch_size, std::uint64_t seed);

struct EpochLog {
  int epoch = 0;  // 0 = the initial parameters, before any update
  LossBreakdown loss;
  double lr = 0.0;
};

/// "epoch\tseq2seq\tguided_attention\tcp_source\tcp_target\tstop\ttotal\tlr"
std::string FormatLogLine(const EpochLog &e);

struct TrainOptions {
  std::string out_dir;  // empty: no files are written
  NormStats norm;       // recorded in checkpoints
  std::function<void(const EpochLog &)> on_epoch;
};

template <typename T>
struct TrainResult {
  ParameterSet<T> params;
  AdamState<T> optimizer;
  std::vector<EpochLog> log;
};

/// Teacher-forced training over `pairs` (already normalized). With an output
/// directory, writes train.log, epoch_0000.as2s with the initial parameters,
/// epoch_NNNN.as2s every checkpoint_every epochs and final.as2s. A non-finite
/// loss throws NumericalError; checkpoints written before it are kept.
template <typename T>
TrainResult<T> Train(const std::vector<ParallelPair> &pairs, const ModelConfig &model,
                     const TrainingConfig &cfg, const TrainOptions &opts);

/// Mean loss over all pairs in fixed batches, without updating anything.
template <typename T>
LossBreakdown EvaluateLoss(const ParameterSet<T> &params, const std::vector<ParallelPair> &pairs,
                           const ModelConfig &model, const TrainingConfig &cfg);

}  // namespace atts2s

#endif  // ATTS2S_TRAINING_H_
