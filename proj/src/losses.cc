// src/losses.cc

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

#include "atts2s/losses.h"

#include <cmath>

namespace atts2s {

void LossWeights::Validate() const {
  if (!(lambda_ga >= 0)) throw ConfigError("lambda_ga must be >= 0");
  if (!(lambda_cp >= 0)) throw ConfigError("lambda_cp must be >= 0");
  if (!(lambda_stop >= 0)) throw ConfigError("lambda_stop must be >= 0");
}

namespace {

double Penalty(double d, double sigma_g) { return -std::expm1(-d * d / (2.0 * sigma_g * sigma_g)); }

double PenaltyEntry(int i, int I, int j, int J, double sigma_g) {
  return Penalty(double(i) / I - double(j) / J, sigma_g);
}

void CheckSigma(double sigma_g) {
  if (!(sigma_g > 0) || !std::isfinite(sigma_g))
    throw ConfigError("sigma_g must be > 0, got " + std::to_string(sigma_g));
}

void CheckFinite(double v, const char *term) {
  if (!std::isfinite(v)) throw NumericalError(std::string("non-finite loss term ") + term);
}

}  // namespace

double PenaltyValue(double delta, double sigma_g) {
  CheckSigma(sigma_g);
  return Penalty(delta, sigma_g);
}

Tensor<double> PenaltyMatrix(int I, int J, double sigma_g) {
  CheckSigma(sigma_g);
  if (I < 1 || J < 1)
    throw DimensionError("penalty matrix needs I, J >= 1, got " + std::to_string(I) + "x" +
                         std::to_string(J));
  Tensor<double> g = Tensor<double>::Matrix(I, J);
  for (int i = 1; i <= I; ++i)
    for (int j = 1; j <= J; ++j) g(i - 1, j - 1) = PenaltyEntry(i, I, j, J, sigma_g);
  return g;
}

template <typename T>
Tensor<T> BatchPenalty(const PaddedBatch<T> &pb, double sigma_g) {
  CheckSigma(sigma_g);
  const int I = pb.source_frames, S = pb.steps;
  Tensor<T> w = Tensor<T>::Matrix(pb.batch * I, S);
  for (int b = 0; b < pb.batch; ++b) {
    const int Ib = pb.source_lengths[b], Sb = pb.step_counts[b];
    for (int i = 1; i <= Ib; ++i)
      for (int j = 1; j <= Sb; ++j)
        w(b * I + i - 1, j - 1) = T(PenaltyEntry(i, Ib, j, Sb, sigma_g));
  }
  return w;
}

template <typename T>
Var GuidedAttentionLoss(Graph<T> &g, Var attention, const Tensor<T> &penalty,
                        const Mask &mask) {
  if (!penalty.SameShape(g.value(attention)))
    throw DimensionError("guided attention: penalty " + penalty.ShapeString() +
                         " vs attention " + g.value(attention).ShapeString());
  return WeightedMean(g, attention, penalty, mask);
}

template <typename T>
Tensor<T> StopTargets(const PaddedBatch<T> &pb) {
  Tensor<T> t = Tensor<T>::Matrix(pb.steps * pb.batch, 1);
  for (int b = 0; b < pb.batch; ++b) t[std::size_t(pb.step_counts[b] - 1) * pb.batch + b] = T(1);
  return t;
}

template <typename T>
Var StopTokenLoss(Graph<T> &g, Var logits, int final_step, double pos_weight) {
  const int n = int(g.value(logits).size());
  if (final_step < 0 || final_step >= n)
    throw IndexError("final step " + std::to_string(final_step) + " outside [0, " +
                     std::to_string(n) + ")");
  Tensor<T> targets(g.value(logits).shape());
  for (int j = final_step; j < n; ++j) targets[j] = T(1);
  return BceWithLogits(g, logits, targets, pos_weight, Mask(std::size_t(n), 1));
}

double ComposeTotal(LossBreakdown &p, const LossWeights &w) {
  CheckFinite(p.seq2seq, "seq2seq");
  CheckFinite(p.guided_attention, "guided_attention");
  CheckFinite(p.cp_source, "cp_source");
  CheckFinite(p.cp_target, "cp_target");
  CheckFinite(p.stop, "stop");
  p.total = p.seq2seq + w.lambda_ga * p.guided_attention +
            w.lambda_cp * (p.cp_source + p.cp_target) + w.lambda_stop * p.stop;
  CheckFinite(p.total, "total");
  return p.total;
}

template <typename T>
LossTerms TotalLoss(Graph<T> &g, const ForwardOutputs &out, const PaddedBatch<T> &pb,
                    const LossWeights &w, double sigma_g, double pos_weight) {
  LossTerms t;
  Var target = g.Constant(pb.target);
  t.seq2seq = L1Masked(g, out.prediction, target, pb.target_mask);
  t.guided_attention =
      GuidedAttentionLoss(g, out.attention, BatchPenalty(pb, sigma_g), AttentionMask(pb));
  t.cp_source = L1Masked(g, out.source_recon, g.Constant(pb.source), pb.source_mask);
  t.cp_target = L1Masked(g, out.target_recon, target, pb.target_mask);
  t.stop = BceWithLogits(g, out.stop_logits, StopTargets(pb), pos_weight, pb.step_mask);

  auto scalar = [&](Var v) { return double(g.value(v)[0]); };
  t.values.seq2seq = scalar(t.seq2seq);
  t.values.guided_attention = scalar(t.guided_attention);
  t.values.cp_source = scalar(t.cp_source);
  t.values.cp_target = scalar(t.cp_target);
  t.values.stop = scalar(t.stop);
  ComposeTotal(t.values, w);

  Var total = Add(g, t.seq2seq, Scale(g, t.guided_attention, w.lambda_ga));
  total = Add(g, total, Scale(g, Add(g, t.cp_source, t.cp_target), w.lambda_cp));
  t.total = Add(g, total, Scale(g, t.stop, w.lambda_stop));
  return t;
}

#define ATTS2S_INSTANTIATE_LOSSES(T)                                                        \
  template Tensor<T> BatchPenalty<T>(const PaddedBatch<T> &, double);                      \
  template Var GuidedAttentionLoss<T>(Graph<T> &, Var, const Tensor<T> &, const Mask &);  \
  template Tensor<T> StopTargets<T>(const PaddedBatch<T> &);                               \
  template Var StopTokenLoss<T>(Graph<T> &, Var, int, double);                             \
  template LossTerms TotalLoss<T>(Graph<T> &, const ForwardOutputs &, const PaddedBatch<T> &, \
                                  const LossWeights &, double, double);

ATTS2S_INSTANTIATE_LOSSES(float)
ATTS2S_INSTANTIATE_LOSSES(double)

}  // namespace atts2s
