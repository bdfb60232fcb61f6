// src/model.cc

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

#include "atts2s/model.h"

#include <algorithm>
#include <cmath>

#include "atts2s/random.h"

namespace atts2s {

void ModelConfig::Validate() const {
  if (feature_dim <= 0) throw ConfigError("feature_dim must be positive");
  if (hidden_dim <= 0) throw ConfigError("hidden_dim must be positive");
  if (hidden_dim % 2 != 0)
    throw ConfigError("hidden_dim must be even, got " + std::to_string(hidden_dim));
  if (attention_dim <= 0) throw ConfigError("attention_dim must be positive");
  if (reduction_factor < 1) throw ConfigError("reduction_factor must be >= 1");
  if (prenet_layers < 1) throw ConfigError("prenet_layers must be >= 1");
}

namespace {

template <typename T>
void AddUniform(ParameterSet<T> &ps, Rng &rng, const std::string &name, int fan_in,
                int fan_out) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  Tensor<T> w = Tensor<T>::Matrix(fan_in, fan_out);
  for (auto &x : w.values()) x = T(rng.Uniform(-limit, limit));
  ps.Add(name, std::move(w));
}

template <typename T>
void AddZeros(ParameterSet<T> &ps, const std::string &name, int n) {
  ps.Add(name, Tensor<T>({n}));
}

template <typename T>
void AddGru(ParameterSet<T> &ps, Rng &rng, const std::string &name, int in, int h) {
  AddUniform(ps, rng, name + ".w_x", in, 3 * h);
  AddZeros(ps, name + ".b_x", 3 * h);
  AddUniform(ps, rng, name + ".w_h", h, 3 * h);
  Tensor<T> b({3 * h});
  for (int k = h; k < 2 * h; ++k) b[k] = T(1);  // update gate
  ps.Add(name + ".b_h", std::move(b));
}

template <typename T>
void AddPrenet(ParameterSet<T> &ps, Rng &rng, const std::string &net, int in, int h,
               int layers) {
  for (int l = 0; l < layers; ++l) {
    const std::string p = net + ".prenet" + std::to_string(l);
    AddUniform(ps, rng, p + ".w", l == 0 ? in : h, 2 * h);
    AddZeros(ps, p + ".b", 2 * h);
  }
}

template <typename T>
Var Prenet(Graph<T> &g, const std::string &net, int layers, Var x) {
  for (int l = 0; l < layers; ++l) {
    const std::string p = net + ".prenet" + std::to_string(l);
    x = Glu(g, Linear(g, x, g.Param(p + ".w"), g.Param(p + ".b")));
  }
  return x;
}

template <typename T>
Var Recurrent(Graph<T> &g, const std::string &layer, Var x, const Mask &mask, int batch,
              bool reverse) {
  Var proj = Linear(g, x, g.Param(layer + ".w_x"), g.Param(layer + ".b_x"));
  return GruSequence(g, proj, g.Param(layer + ".w_h"), g.Param(layer + ".b_h"), mask, batch,
                     reverse);
}

template <typename T>
Var Bidirectional(Graph<T> &g, const std::string &net, Var x, const Mask &mask, int batch) {
  Var fwd = Recurrent(g, net + ".fwd", x, mask, batch, false);
  Var bwd = Recurrent(g, net + ".bwd", x, mask, batch, true);
  return ConcatCols(g, fwd, bwd);
}

// Prenet, bidirectional layer, linear to D: the shared shape of the source
// decoder and target decoder.
template <typename T>
Var FrameDecoder(Graph<T> &g, const ModelConfig &cfg, const std::string &net, Var x,
                 const Mask &mask, int batch) {
  Var h = Bidirectional(g, net, Prenet(g, net, cfg.prenet_layers, x), mask, batch);
  return Linear(g, h, g.Param(net + ".out.w"), g.Param(net + ".out.b"));
}

template <typename T>
void CheckRows(Graph<T> &g, Var v, std::size_t rows, const char *what) {
  if (std::size_t(g.value(v).rows()) != rows)
    throw DimensionError(std::string(what) + ": expected " + std::to_string(rows) +
                         " rows, got " + g.value(v).ShapeString());
}

// The decoder output bias is one frame's worth of values shared by the r
// frames of a group.
template <typename T>
Var GroupBias(Graph<T> &g, const ModelConfig &cfg) {
  const int d = cfg.feature_dim, r = cfg.reduction_factor;
  std::vector<int> index(std::size_t(r) * d);
  for (std::size_t k = 0; k < index.size(); ++k) index[k] = int(k % d);
  return Gather(g, g.Param("decoder.out.b"), std::move(index), {r * d});
}

// (steps * batch) x (r * D) -> (steps * r * batch) x D.
template <typename T>
Var GroupsToFrames(Graph<T> &g, Var groups, int steps, int r, int d, int batch) {
  std::vector<int> index(std::size_t(steps) * r * batch * d);
  std::size_t k = 0;
  for (int j = 0; j < steps; ++j)
    for (int q = 0; q < r; ++q)
      for (int b = 0; b < batch; ++b)
        for (int c = 0; c < d; ++c)
          index[k++] = ((j * batch + b) * r + q) * d + c;
  return Gather(g, groups, std::move(index), {steps * r * batch, d});
}

template <typename T>
DecoderOutputs DecoderHead(Graph<T> &g, const ModelConfig &cfg, Var state, Var context,
                           int steps, int batch) {
  Var features = ConcatCols(g, state, context);
  Var groups = Linear(g, features, g.Param("decoder.out.w"), GroupBias(g, cfg));
  DecoderOutputs out;
  out.frames = GroupsToFrames(g, groups, steps, cfg.reduction_factor, cfg.feature_dim, batch);
  out.stop_logits = Linear(g, features, g.Param("decoder.stop.w"), g.Param("decoder.stop.b"));
  return out;
}

}  // namespace

template <typename T>
ParameterSet<T> InitParameters(const ModelConfig &cfg, std::uint64_t seed) {
  cfg.Validate();
  const int d = cfg.feature_dim, h = cfg.hidden_dim, half = h / 2, a = cfg.attention_dim;
  const int r = cfg.reduction_factor, layers = cfg.prenet_layers;
  Rng rng(seed);
  ParameterSet<T> ps;

  AddPrenet(ps, rng, "src_enc", d, h, layers);
  AddGru(ps, rng, "src_enc.fwd", h, half);
  AddGru(ps, rng, "src_enc.bwd", h, half);

  AddPrenet(ps, rng, "tgt_enc", d, h, layers);
  AddGru(ps, rng, "tgt_enc.gru", h, h);

  AddUniform(ps, rng, "attention.w_k", h, a);
  AddUniform(ps, rng, "attention.w_q", h, a);
  AddZeros(ps, "attention.b", a);
  {
    const double limit = std::sqrt(6.0 / (a + 1));
    Tensor<T> score({a});
    for (auto &x : score.values()) x = T(rng.Uniform(-limit, limit));
    ps.Add("attention.score", std::move(score));
  }

  AddGru(ps, rng, "decoder.gru", 2 * h, h);
  AddUniform(ps, rng, "decoder.out.w", 2 * h, r * d);
  AddZeros(ps, "decoder.out.b", d);
  AddUniform(ps, rng, "decoder.stop.w", 2 * h, 1);
  AddZeros(ps, "decoder.stop.b", 1);

  for (const char *net : {"src_dec", "tgt_dec"}) {
    const std::string n = net;
    AddPrenet(ps, rng, n, h, h, layers);
    AddGru(ps, rng, n + ".fwd", h, half);
    AddGru(ps, rng, n + ".bwd", h, half);
    AddUniform(ps, rng, n + ".out.w", h, d);
    AddZeros(ps, n + ".out.b", d);
  }
  return ps;
}

template <typename T>
PaddedBatch<T> MakePaddedBatch(const std::vector<ParallelPair> &pairs,
                               const std::vector<std::size_t> &indices, int reduction_factor) {
  if (indices.empty()) throw EmptyInputError("batch has no sequences");
  if (reduction_factor < 1) throw ConfigError("reduction_factor must be >= 1");
  PaddedBatch<T> pb;
  pb.batch = int(indices.size());
  pb.reduction_factor = reduction_factor;
  const int r = reduction_factor;
  for (std::size_t idx : indices) {
    if (idx >= pairs.size())
      throw IndexError("pair index " + std::to_string(idx) + " out of range");
    const ParallelPair &p = pairs[idx];
    if (p.source.empty() || p.target.empty())
      throw EmptyInputError("pair " + std::to_string(idx) + " has an empty sequence");
    if (pb.feature_dim == 0) pb.feature_dim = p.source.dims();
    if (p.source.dims() != pb.feature_dim || p.target.dims() != pb.feature_dim)
      throw DimensionError("pair " + std::to_string(idx) + " has feature dims " +
                           std::to_string(p.source.dims()) + "/" +
                           std::to_string(p.target.dims()) + ", expected " +
                           std::to_string(pb.feature_dim));
    pb.source_lengths.push_back(p.source.frames());
    pb.target_lengths.push_back(p.target.frames());
    pb.step_counts.push_back((p.target.frames() + r - 1) / r);
    pb.source_frames = std::max(pb.source_frames, p.source.frames());
    pb.steps = std::max(pb.steps, pb.step_counts.back());
  }
  const int B = pb.batch, D = pb.feature_dim, I = pb.source_frames, J = pb.target_frames();
  pb.source = Tensor<T>::Matrix(I * B, D);
  pb.target = Tensor<T>::Matrix(J * B, D);
  pb.source_mask.assign(std::size_t(I) * B, 0);
  pb.target_mask.assign(std::size_t(J) * B, 0);
  pb.step_mask.assign(std::size_t(pb.steps) * B, 0);
  for (int b = 0; b < B; ++b) {
    const ParallelPair &p = pairs[indices[b]];
    for (int t = 0; t < p.source.frames(); ++t) {
      std::copy(p.source.frame(t), p.source.frame(t) + D, pb.source.row(t * B + b));
      pb.source_mask[std::size_t(t) * B + b] = 1;
    }
    for (int t = 0; t < p.target.frames(); ++t) {
      std::copy(p.target.frame(t), p.target.frame(t) + D, pb.target.row(t * B + b));
      pb.target_mask[std::size_t(t) * B + b] = 1;
    }
    for (int j = 0; j < pb.step_counts[b]; ++j) pb.step_mask[std::size_t(j) * B + b] = 1;
  }
  return pb;
}

template <typename T>
Var RecurrentStep(Graph<T> &g, const std::string &layer, Var x, Var h_prev) {
  Var proj = Linear(g, x, g.Param(layer + ".w_x"), g.Param(layer + ".b_x"));
  return GruCell(g, proj, h_prev, g.Param(layer + ".w_h"), g.Param(layer + ".b_h"));
}

template <typename T>
EncodedSource EncodeSource(Graph<T> &g, const ModelConfig &cfg, Var source,
                           const Mask &source_mask, int batch) {
  const Tensor<T> &x = g.value(source);
  if (x.empty() || x.rows() == 0) throw EmptyInputError("source sequence is empty");
  if (x.cols() != cfg.feature_dim)
    throw DimensionError("source has " + std::to_string(x.cols()) + " dims, model expects " +
                         std::to_string(cfg.feature_dim));
  CheckRows(g, source, source_mask.size(), "source mask");
  EncodedSource out;
  out.keys = Bidirectional(g, "src_enc", Prenet(g, "src_enc", cfg.prenet_layers, source),
                           source_mask, batch);
  out.source_mask = source_mask;
  out.batch = batch;
  out.frames = x.rows() / batch;
  return out;
}

template <typename T>
Tensor<T> TargetEncoderInputs(const PaddedBatch<T> &pb) {
  const int B = pb.batch, D = pb.feature_dim, r = pb.reduction_factor;
  Tensor<T> in = Tensor<T>::Matrix(pb.steps * B, D);
  for (int b = 0; b < B; ++b)
    for (int j = 1; j < pb.step_counts[b]; ++j) {
      const T *src = pb.target.row((j * r - 1) * B + b);
      std::copy(src, src + D, in.row(j * B + b));
    }
  return in;
}

template <typename T>
Var EncodeTarget(Graph<T> &g, const ModelConfig &cfg, Var inputs, const Mask &step_mask,
                 int batch) {
  const Tensor<T> &y = g.value(inputs);
  if (y.empty() || y.rows() == 0) throw EmptyInputError("target sequence is empty");
  if (y.cols() != cfg.feature_dim)
    throw DimensionError("target has " + std::to_string(y.cols()) + " dims, model expects " +
                         std::to_string(cfg.feature_dim));
  CheckRows(g, inputs, step_mask.size(), "step mask");
  return Recurrent(g, "tgt_enc.gru", Prenet(g, "tgt_enc", cfg.prenet_layers, inputs),
                   step_mask, batch, false);
}

template <typename T>
Var EncodeTargetStep(Graph<T> &g, const ModelConfig &cfg, Var frame, Var state) {
  if (g.value(frame).cols() != cfg.feature_dim)
    throw DimensionError("target frame has " + std::to_string(g.value(frame).cols()) +
                         " dims, model expects " + std::to_string(cfg.feature_dim));
  return RecurrentStep(g, "tgt_enc.gru", Prenet(g, "tgt_enc", cfg.prenet_layers, frame), state);
}

template <typename T>
Attention Attend(Graph<T> &g, const ModelConfig &, const EncodedSource &src, Var queries) {
  const int B = src.batch, I = src.frames;
  if (I == 0) throw EmptyInputError("attention over an empty source");
  Var keys_proj = Linear(g, src.keys, g.Param("attention.w_k"));
  Var query_proj = Linear(g, queries, g.Param("attention.w_q"), g.Param("attention.b"));
  Var energies = AdditiveEnergies(g, keys_proj, query_proj, g.Param("attention.score"), B);
  const int steps = g.value(energies).cols();
  Mask mask(std::size_t(B) * I * steps, 0);
  for (int b = 0; b < B; ++b)
    for (int i = 0; i < I; ++i)
      if (src.source_mask[std::size_t(i) * B + b])
        std::fill_n(mask.begin() + (std::size_t(b) * I + i) * steps, steps, 1);
  Attention out;
  out.weights = SoftmaxMasked(g, energies, mask, I);
  out.context = AttentionContext(g, out.weights, src.keys, B);
  return out;
}

template <typename T>
DecoderOutputs DecodeSteps(Graph<T> &g, const ModelConfig &cfg, Var context, Var queries,
                           const Mask &step_mask, int batch) {
  CheckRows(g, context, step_mask.size(), "decoder context");
  const int steps = int(step_mask.size()) / batch;
  Var state = Recurrent(g, "decoder.gru", ConcatCols(g, context, queries), step_mask, batch,
                        false);
  return DecoderHead(g, cfg, state, context, steps, batch);
}

template <typename T>
DecoderStep DecodeStep(Graph<T> &g, const ModelConfig &cfg, Var context, Var query,
                       Var state) {
  const int batch = g.value(state).rows();
  DecoderStep out;
  out.state = RecurrentStep(g, "decoder.gru", ConcatCols(g, context, query), state);
  DecoderOutputs head = DecoderHead(g, cfg, out.state, context, 1, batch);
  out.frames = head.frames;
  out.stop_logit = head.stop_logits;
  return out;
}

template <typename T>
Var SourceDecode(Graph<T> &g, const ModelConfig &cfg, Var keys, const Mask &source_mask,
                 int batch) {
  return FrameDecoder(g, cfg, "src_dec", keys, source_mask, batch);
}

template <typename T>
Var TargetDecode(Graph<T> &g, const ModelConfig &cfg, Var context, const Mask &frame_mask,
                 int batch) {
  const Tensor<T> &rv = g.value(context);
  const int r = cfg.reduction_factor, h = rv.cols(), steps = rv.rows() / batch;
  if (frame_mask.size() != std::size_t(steps) * r * batch)
    throw DimensionError("target decoder: frame mask length " +
                         std::to_string(frame_mask.size()) + " vs " + std::to_string(steps) +
                         " steps of " + std::to_string(r));
  std::vector<int> index(std::size_t(steps) * r * batch * h);
  std::size_t k = 0;
  for (int j = 0; j < steps; ++j)
    for (int q = 0; q < r; ++q)
      for (int b = 0; b < batch; ++b)
        for (int c = 0; c < h; ++c) index[k++] = (j * batch + b) * h + c;
  Var up = Gather(g, context, std::move(index), {steps * r * batch, h});
  return FrameDecoder(g, cfg, "tgt_dec", up, frame_mask, batch);
}

template <typename T>
ForwardOutputs ForwardTraining(Graph<T> &g, const ModelConfig &cfg,
                               const PaddedBatch<T> &pb) {
  if (pb.reduction_factor != cfg.reduction_factor)
    throw ConfigError("batch grouped with r=" + std::to_string(pb.reduction_factor) +
                      ", model has r=" + std::to_string(cfg.reduction_factor));
  ForwardOutputs out;
  out.encoded = EncodeSource(g, cfg, g.Constant(pb.source), pb.source_mask, pb.batch);
  out.queries =
      EncodeTarget(g, cfg, g.Constant(TargetEncoderInputs(pb)), pb.step_mask, pb.batch);
  Attention att = Attend(g, cfg, out.encoded, out.queries);
  out.attention = att.weights;
  out.seed = att.context;
  DecoderOutputs dec = DecodeSteps(g, cfg, att.context, out.queries, pb.step_mask, pb.batch);
  out.prediction = dec.frames;
  out.stop_logits = dec.stop_logits;
  out.source_recon = SourceDecode(g, cfg, out.encoded.keys, pb.source_mask, pb.batch);
  out.target_recon = TargetDecode(g, cfg, att.context, pb.target_mask, pb.batch);
  return out;
}

template <typename T>
Mask AttentionMask(const PaddedBatch<T> &pb) {
  const int B = pb.batch, I = pb.source_frames, S = pb.steps;
  Mask m(std::size_t(B) * I * S, 0);
  for (int b = 0; b < B; ++b)
    for (int i = 0; i < pb.source_lengths[b]; ++i)
      for (int j = 0; j < pb.step_counts[b]; ++j) m[(std::size_t(b) * I + i) * S + j] = 1;
  return m;
}

template <typename T>
FeatureSequence ExtractSequence(const Tensor<T> &batched, int batch, int b, int length) {
  const int d = batched.cols();
  if (length * batch > batched.rows())
    throw DimensionError("cannot extract " + std::to_string(length) + " frames from " +
                         batched.ShapeString() + " with batch " + std::to_string(batch));
  FeatureSequence seq(length, d);
  for (int t = 0; t < length; ++t)
    for (int c = 0; c < d; ++c) seq(t, c) = float(batched(t * batch + b, c));
  return seq;
}

#define ATTS2S_INSTANTIATE_MODEL(T)                                                         \
  template ParameterSet<T> InitParameters<T>(const ModelConfig &, std::uint64_t);          \
  template PaddedBatch<T> MakePaddedBatch<T>(const std::vector<ParallelPair> &,             \
                                             const std::vector<std::size_t> &, int);        \
  template Var RecurrentStep<T>(Graph<T> &, const std::string &, Var, Var);                \
  template EncodedSource EncodeSource<T>(Graph<T> &, const ModelConfig &, Var, const Mask &, \
                                         int);                                              \
  template Tensor<T> TargetEncoderInputs<T>(const PaddedBatch<T> &);                        \
  template Var EncodeTarget<T>(Graph<T> &, const ModelConfig &, Var, const Mask &, int);   \
  template Var EncodeTargetStep<T>(Graph<T> &, const ModelConfig &, Var, Var);             \
  template Attention Attend<T>(Graph<T> &, const ModelConfig &, const EncodedSource &, Var); \
  template DecoderOutputs DecodeSteps<T>(Graph<T> &, const ModelConfig &, Var, Var,         \
                                         const Mask &, int);                                \
  template DecoderStep DecodeStep<T>(Graph<T> &, const ModelConfig &, Var, Var, Var);       \
  template Var SourceDecode<T>(Graph<T> &, const ModelConfig &, Var, const Mask &, int);   \
  template Var TargetDecode<T>(Graph<T> &, const ModelConfig &, Var, const Mask &, int);   \
  template ForwardOutputs ForwardTraining<T>(Graph<T> &, const ModelConfig &,               \
                                             const PaddedBatch<T> &);                       \
  template Mask AttentionMask<T>(const PaddedBatch<T> &);                                   \
  template FeatureSequence ExtractSequence<T>(const Tensor<T> &, int, int, int);

ATTS2S_INSTANTIATE_MODEL(float)
ATTS2S_INSTANTIATE_MODEL(double)

}  // namespace atts2s
