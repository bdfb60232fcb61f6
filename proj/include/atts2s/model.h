// atts2s/model.h

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

// The conversion network: source encoder, causal target encoder, additive
// attention, autoregressive target decoder with stop token, and the two
// context-preservation decoders (source decoder on the source embeddings,
// target decoder on the attention seed).
//
// Every function builds nodes on a Graph bound to the model's ParameterSet.
// Sequences are batched time-major (see ops.h). Target-side quantities exist
// at two resolutions: decoder steps (one per group of `reduction_factor`
// frames) and frames.

#ifndef ATTS2S_MODEL_H_
#define ATTS2S_MODEL_H_

#include <cstdint>
#include <string>
#include <vector>

#include "atts2s/data.h"
#include "atts2s/graph.h"
#include "atts2s/ops.h"

namespace atts2s {

struct ModelConfig {
  int feature_dim = 8;
  int hidden_dim = 64;
  int attention_dim = 64;
  int reduction_factor = 5;
  int prenet_layers = 1;

  void Validate() const;
  bool operator==(const ModelConfig &) const = default;
};

/// Creates every parameter with Glorot-uniform weights, zero biases and a
/// +1 update-gate bias in each recurrent layer.
template <typename T>
ParameterSet<T> InitParameters(const ModelConfig &cfg, std::uint64_t seed);

/// Parallel pairs padded into one batch.
template <typename T>
struct PaddedBatch {
  int batch = 0;
  int source_frames = 0;  // I, longest source
  int steps = 0;          // J', longest target in decoder steps
  int reduction_factor = 1;
  int feature_dim = 0;
  Tensor<T> source;    // (I * batch) x D
  Tensor<T> target;    // (J' * r * batch) x D, zero padded
  Mask source_mask;    // I * batch
  Mask target_mask;    // J' * r * batch
  Mask step_mask;      // J' * batch
  std::vector<int> source_lengths;
  std::vector<int> target_lengths;
  std::vector<int> step_counts;

  int target_frames() const { return steps * reduction_factor; }
};

/// Pads `pairs[indices]` into a batch. Target lengths are rounded up to whole
/// decoder steps; the padded frames are masked.
template <typename T>
PaddedBatch<T> MakePaddedBatch(const std::vector<ParallelPair> &pairs,
                               const std::vector<std::size_t> &indices, int reduction_factor);

struct EncodedSource {
  Var keys;          // K: (I * batch) x H
  Mask source_mask;  // I * batch
  int batch = 0;
  int frames = 0;
};

/// One of the named recurrent layers: x -> GRU(W_x x + b_x).
template <typename T>
Var RecurrentStep(Graph<T> &g, const std::string &layer, Var x, Var h_prev);

template <typename T>
EncodedSource EncodeSource(Graph<T> &g, const ModelConfig &cfg, Var source,
                           const Mask &source_mask, int batch);

/// Target-encoder inputs for teacher forcing: an all-zero go frame, then the
/// last frame of each group except the final one. Rows are (step * batch + b).
template <typename T>
Tensor<T> TargetEncoderInputs(const PaddedBatch<T> &batch);

/// Q: (J' * batch) x H from the inputs above through the causal encoder.
template <typename T>
Var EncodeTarget(Graph<T> &g, const ModelConfig &cfg, Var inputs, const Mask &step_mask,
                 int batch);

/// One step of the causal encoder: `frame` (batch x D) is the go frame or the
/// last frame of the previous group, `state` the previous output (zeros at
/// step 0). Returns q_j, which is also the next state.
template <typename T>
Var EncodeTargetStep(Graph<T> &g, const ModelConfig &cfg, Var frame, Var state);

struct Attention {
  Var weights;  // A: (batch * I) x steps, one column-stochastic block per sequence
  Var context;  // R: (steps * batch) x H, r_j = K a_j
};

/// Additive attention of every query row against the encoded source.
template <typename T>
Attention Attend(Graph<T> &g, const ModelConfig &cfg, const EncodedSource &src, Var queries);

struct DecoderOutputs {
  Var frames;       // (steps * r * batch) x D
  Var stop_logits;  // (steps * batch) x 1
};

/// Autoregressive decoder over all steps at once (teacher forcing).
template <typename T>
DecoderOutputs DecodeSteps(Graph<T> &g, const ModelConfig &cfg, Var context, Var queries,
                           const Mask &step_mask, int batch);

struct DecoderStep {
  Var frames;      // (r * batch) x D
  Var stop_logit;  // batch x 1
  Var state;       // batch x H
};

/// One decoder step from an explicit state (zeros at step 0). Produces the
/// same numbers as the matching step of DecodeSteps.
template <typename T>
DecoderStep DecodeStep(Graph<T> &g, const ModelConfig &cfg, Var context, Var query, Var state);

/// X~ = f_SrcDec(K): (I * batch) x D.
template <typename T>
Var SourceDecode(Graph<T> &g, const ModelConfig &cfg, Var keys, const Mask &source_mask,
                 int batch);

/// Y~ = f_TarDec(R): each seed row repeated r times, then the same stack as
/// the source decoder. (steps * r * batch) x D.
template <typename T>
Var TargetDecode(Graph<T> &g, const ModelConfig &cfg, Var context, const Mask &frame_mask,
                 int batch);

struct ForwardOutputs {
  Var prediction;      // Y^: (J' r batch) x D
  Var attention;       // A: (batch I) x J'
  Var stop_logits;     // (J' batch) x 1
  Var source_recon;    // X~: (I batch) x D
  Var target_recon;    // Y~: (J' r batch) x D
  Var seed;            // R: (J' batch) x H
  EncodedSource encoded;
  Var queries;         // Q: (J' batch) x H
};

/// Teacher-forced pass through all six networks.
template <typename T>
ForwardOutputs ForwardTraining(Graph<T> &g, const ModelConfig &cfg, const PaddedBatch<T> &batch);

/// Element mask for the attention matrix of a batch: valid source row and
/// valid decoder step.
template <typename T>
Mask AttentionMask(const PaddedBatch<T> &batch);

/// Rows of a (frames * batch) x D tensor belonging to sequence `b`, as a
/// FeatureSequence of `length` frames.
template <typename T>
FeatureSequence ExtractSequence(const Tensor<T> &batched, int batch, int b, int length);

}  // namespace atts2s

#endif  // ATTS2S_MODEL_H_
