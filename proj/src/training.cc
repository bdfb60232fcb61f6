// src/training.cc

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

#include "atts2s/training.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "atts2s/random.h"

namespace atts2s {

void TrainingConfig::Validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(sigma_g > 0) || !std::isfinite(sigma_g)) throw ConfigError("sigma_g must be > 0");
  weights.Validate();
  if (!(stop_pos_weight > 0)) throw ConfigError("stop_pos_weight must be > 0");
  if (warmup_steps < 1) throw ConfigError("warmup_steps must be >= 1");
  if (!(base_lr_scale > 0) || !std::isfinite(base_lr_scale))
    throw ConfigError("base_lr_scale must be > 0");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1)) throw ConfigError("adam_beta1 must be in [0, 1)");
  if (!(adam_beta2 >= 0 && adam_beta2 < 1)) throw ConfigError("adam_beta2 must be in [0, 1)");
  if (!(adam_eps > 0)) throw ConfigError("adam_eps must be > 0");
  if (!(clip_norm > 0)) throw ConfigError("clip_norm must be > 0");
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
}

double LrAt(std::int64_t step, const TrainingConfig &cfg) {
  if (step < 1) throw IndexError("learning rate step must be >= 1, got " + std::to_string(step));
  const double s = double(step);
  return cfg.base_lr_scale *
         std::min(1.0 / std::sqrt(s), s * std::pow(double(cfg.warmup_steps), -1.5));
}

template <typename T>
AdamState<T> AdamState<T>::ZerosLike(const ParameterSet<T> &params) {
  AdamState<T> s;
  for (const auto &p : params) {
    s.m.emplace_back(p.value.shape());
    s.v.emplace_back(p.value.shape());
  }
  return s;
}

template <typename T>
void AdamStep(ParameterSet<T> &params, AdamState<T> &state, double lr,
              const TrainingConfig &cfg) {
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw DimensionError("optimizer state holds " + std::to_string(state.m.size()) +
                         " moments for " + std::to_string(params.size()) + " parameters");
  ++state.step;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, double(state.step));
  const double c2 = 1.0 - std::pow(b2, double(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter<T> &p = params[k];
    Tensor<T> &m = state.m[k], &v = state.v[k];
    if (!p.grad.SameShape(p.value) || !m.SameShape(p.value) || !v.SameShape(p.value))
      throw DimensionError("shape mismatch in optimizer state for " + p.name);
    for (std::size_t e = 0; e < p.value.size(); ++e) {
      const double g = p.grad[e];
      const double mk = b1 * double(m[e]) + (1.0 - b1) * g;
      const double vk = b2 * double(v[e]) + (1.0 - b2) * g * g;
      m[e] = T(mk);
      v[e] = T(vk);
      p.value[e] = T(double(p.value[e]) - lr * (mk / c1) / (std::sqrt(vk / c2) + cfg.adam_eps));
    }
  }
}

template <typename T>
double ClipGradNorm(ParameterSet<T> &params, double max_norm) {
  const double norm = params.GradNorm();
  if (!std::isfinite(norm)) throw NumericalError("gradient norm is not finite");
  if (norm > max_norm) {
    // The scaled norm can exceed the bound by rounding; shave a few ulps.
    const double factor = max_norm / norm * (1.0 - 1e-12);
    for (auto &p : params)
      for (auto &g : p.grad.values()) g = T(double(g) * factor);
  }
  return norm;
}

std::vector<std::vector<std::size_t>> MakeBatches(const std::vector<ParallelPair> &pairs,
                                                  int batch_size, std::uint64_t seed) {
  if (pairs.empty()) throw EmptyInputError("no training pairs");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  constexpr std::size_t kBatchesPerBucket = 8;
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  Rng rng(seed);
  rng.Shuffle(order);
  const std::size_t bs = std::size_t(batch_size), bucket = bs * kBatchesPerBucket;
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += bucket) {
    const std::size_t end = std::min(order.size(), start + bucket);
    std::stable_sort(order.begin() + start, order.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                       return pairs[a].source.frames() < pairs[b].source.frames();
                     });
    for (std::size_t k = start; k < end; k += bs)
      batches.emplace_back(order.begin() + k, order.begin() + std::min(end, k + bs));
  }
  rng.Shuffle(batches);
  return batches;
}

std::string FormatLogLine(const EpochLog &e) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%d\t%.9g\t%.9g\t%.9g\t%.9g\t%.9g\t%.9g\t%.9g", e.epoch,
                e.loss.seq2seq, e.loss.guided_attention, e.loss.cp_source, e.loss.cp_target,
                e.loss.stop, e.loss.total, e.lr);
  return buf;
}

namespace {

void Accumulate(LossBreakdown &acc, const LossBreakdown &x, double w) {
  acc.seq2seq += w * x.seq2seq;
  acc.guided_attention += w * x.guided_attention;
  acc.cp_source += w * x.cp_source;
  acc.cp_target += w * x.cp_target;
  acc.stop += w * x.stop;
  acc.total += w * x.total;
}

void StoreTrainingConfig(Checkpoint &ck, const TrainingConfig &c) {
  ck.config.emplace_back("batch_size", c.batch_size);
  ck.config.emplace_back("epochs", c.epochs);
  ck.config.emplace_back("sigma_g", c.sigma_g);
  ck.config.emplace_back("lambda_ga", c.weights.lambda_ga);
  ck.config.emplace_back("lambda_cp", c.weights.lambda_cp);
  ck.config.emplace_back("lambda_stop", c.weights.lambda_stop);
  ck.config.emplace_back("stop_pos_weight", c.stop_pos_weight);
  ck.config.emplace_back("warmup_steps", c.warmup_steps);
  ck.config.emplace_back("base_lr_scale", c.base_lr_scale);
  ck.config.emplace_back("adam_beta1", c.adam_beta1);
  ck.config.emplace_back("adam_beta2", c.adam_beta2);
  ck.config.emplace_back("adam_eps", c.adam_eps);
  ck.config.emplace_back("clip_norm", c.clip_norm);
  ck.config.emplace_back("checkpoint_every", c.checkpoint_every);
  ck.config.emplace_back("seed", double(c.seed));
}

template <typename T>
void WriteCheckpoint(const std::string &path, const ParameterSet<T> &params,
                     const AdamState<T> &opt, const ModelConfig &model,
                     const TrainingConfig &cfg, const NormStats &norm) {
  Checkpoint ck;
  StoreModelConfig(ck, model);
  StoreTrainingConfig(ck, cfg);
  ck.params = params.template Cast<float>();
  for (std::size_t k = 0; k < opt.m.size(); ++k) {
    ck.adam_m.push_back(opt.m[k].template Cast<float>());
    ck.adam_v.push_back(opt.v[k].template Cast<float>());
  }
  ck.step = std::uint64_t(opt.step);
  ck.norm = norm;
  SaveCheckpoint(path, ck);
}

}  // namespace

template <typename T>
LossBreakdown EvaluateLoss(const ParameterSet<T> &params, const std::vector<ParallelPair> &pairs,
                           const ModelConfig &model, const TrainingConfig &cfg) {
  if (pairs.empty()) throw EmptyInputError("no pairs to evaluate");
  auto &ps = const_cast<ParameterSet<T> &>(params);  // graphs only read values
  LossBreakdown acc;
  std::size_t n = 0;
  for (std::size_t start = 0; start < pairs.size(); start += std::size_t(cfg.batch_size)) {
    std::vector<std::size_t> idx;
    for (std::size_t k = start; k < std::min(pairs.size(), start + cfg.batch_size); ++k)
      idx.push_back(k);
    const PaddedBatch<T> pb = MakePaddedBatch<T>(pairs, idx, model.reduction_factor);
    Graph<T> g(&ps, false);
    const ForwardOutputs out = ForwardTraining(g, model, pb);
    const LossTerms terms = TotalLoss(g, out, pb, cfg.weights, cfg.sigma_g, cfg.stop_pos_weight);
    Accumulate(acc, terms.values, double(idx.size()));
    n += idx.size();
  }
  LossBreakdown mean;
  Accumulate(mean, acc, 1.0 / double(n));
  return mean;
}

template <typename T>
TrainResult<T> Train(const std::vector<ParallelPair> &pairs, const ModelConfig &model,
                     const TrainingConfig &cfg, const TrainOptions &opts) {
  model.Validate();
  cfg.Validate();
  if (pairs.empty()) throw EmptyInputError("no training pairs");
  for (const auto &p : pairs)
    if (p.source.dims() != model.feature_dim || p.target.dims() != model.feature_dim)
      throw DimensionError("training pair has " + std::to_string(p.source.dims()) +
                           " dims, model expects " + std::to_string(model.feature_dim));

  TrainResult<T> res;
  res.params = InitParameters<T>(model, cfg.seed);
  res.optimizer = AdamState<T>::ZerosLike(res.params);

  std::ofstream log;
  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    log.open(opts.out_dir + "/train.log", std::ios::trunc);
    if (!log) throw IoError("cannot write " + opts.out_dir + "/train.log");
  }
  auto emit = [&](const EpochLog &e) {
    res.log.push_back(e);
    if (log.is_open()) {
      log << FormatLogLine(e) << '\n';
      log.flush();
    }
    if (opts.on_epoch) opts.on_epoch(e);
  };

  EpochLog initial;
  initial.loss = EvaluateLoss(res.params, pairs, model, cfg);
  emit(initial);
  if (!opts.out_dir.empty())
    WriteCheckpoint(opts.out_dir + "/epoch_0000.as2s", res.params, res.optimizer, model, cfg,
                    opts.norm);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto batches = MakeBatches(pairs, cfg.batch_size, cfg.seed + std::uint64_t(epoch));
    EpochLog e;
    e.epoch = epoch;
    std::size_t seen = 0;
    for (const auto &idx : batches) {
      const PaddedBatch<T> pb = MakePaddedBatch<T>(pairs, idx, model.reduction_factor);
      Graph<T> g(&res.params, true);
      const ForwardOutputs out = ForwardTraining(g, model, pb);
      const LossTerms terms =
          TotalLoss(g, out, pb, cfg.weights, cfg.sigma_g, cfg.stop_pos_weight);
      g.Backward(terms.total);
      ClipGradNorm(res.params, cfg.clip_norm);
      e.lr = LrAt(res.optimizer.step + 1, cfg);
      AdamStep(res.params, res.optimizer, e.lr, cfg);
      Accumulate(e.loss, terms.values, double(idx.size()));
      seen += idx.size();
    }
    LossBreakdown mean;
    Accumulate(mean, e.loss, 1.0 / double(seen));
    e.loss = mean;
    emit(e);
    if (!opts.out_dir.empty() && (epoch % cfg.checkpoint_every == 0 || epoch == cfg.epochs)) {
      char name[32];
      std::snprintf(name, sizeof(name), "/epoch_%04d.as2s", epoch);
      WriteCheckpoint(opts.out_dir + name, res.params, res.optimizer, model, cfg, opts.norm);
    }
  }
  if (!opts.out_dir.empty())
    WriteCheckpoint(opts.out_dir + "/final.as2s", res.params, res.optimizer, model, cfg,
                    opts.norm);
  return res;
}

#define ATTS2S_INSTANTIATE_TRAINING(T)                                                      \
  template struct AdamState<T>;                                                             \
  template void AdamStep<T>(ParameterSet<T> &, AdamState<T> &, double,                      \
                            const TrainingConfig &);                                        \
  template double ClipGradNorm<T>(ParameterSet<T> &, double);                               \
  template LossBreakdown EvaluateLoss<T>(const ParameterSet<T> &,                           \
                                         const std::vector<ParallelPair> &,                 \
                                         const ModelConfig &, const TrainingConfig &);      \
  template TrainResult<T> Train<T>(const std::vector<ParallelPair> &, const ModelConfig &,  \
                                   const TrainingConfig &, const TrainOptions &);

ATTS2S_INSTANTIATE_TRAINING(float)
ATTS2S_INSTANTIATE_TRAINING(double)

}  // namespace atts2s
