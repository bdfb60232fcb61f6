// atts2s/losses.h

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

// Training objective: L1 conversion loss, guided attention, context
// preservation on both sides and the stop-token term. All L1 norms are means
// over valid elements.

#ifndef ATTS2S_LOSSES_H_
#define ATTS2S_LOSSES_H_

#include <string>

#include "atts2s/model.h"

namespace atts2s {

struct LossWeights {
  double lambda_ga = 10000.0;
  double lambda_cp = 10.0;
  double lambda_stop = 1.0;

  void Validate() const;
};

struct LossBreakdown {
  double seq2seq = 0.0;
  double guided_attention = 0.0;
  double cp_source = 0.0;
  double cp_target = 0.0;
  double stop = 0.0;
  double total = 0.0;
};

/// 1 - exp(-delta^2 / (2 sigma^2)). Throws ConfigError unless sigma > 0.
double PenaltyValue(double delta, double sigma_g);

/// g[i-1, j-1] = 1 - exp(-(i/I - j/J)^2 / (2 sigma^2)) for 1-based i, j.
Tensor<double> PenaltyMatrix(int I, int J, double sigma_g);

/// Penalty weights laid out like a batch attention matrix, each sequence
/// using its own source length and step count.
template <typename T>
Tensor<T> BatchPenalty(const PaddedBatch<T> &batch, double sigma_g);

/// Mean of g * a over the valid entries.
template <typename T>
Var GuidedAttentionLoss(Graph<T> &g, Var attention, const Tensor<T> &penalty,
                        const Mask &mask);

/// BCE targets for a batch: 1 at each sequence's final step, 0 elsewhere.
template <typename T>
Tensor<T> StopTargets(const PaddedBatch<T> &batch);

/// Single sequence stop loss: targets are 1 at steps >= final_step.
template <typename T>
Var StopTokenLoss(Graph<T> &g, Var logits, int final_step, double pos_weight);

/// Weighted sum of the parts; throws NumericalError naming a non-finite part.
double ComposeTotal(LossBreakdown &parts, const LossWeights &w);

struct LossTerms {
  Var seq2seq, guided_attention, cp_source, cp_target, stop, total;
  LossBreakdown values;
};

constexpr double kStopPositiveWeight = 5.0;

/// Builds every loss term of a teacher-forced forward pass and their weighted
/// sum. Throws NumericalError when a term is not finite.
template <typename T>
LossTerms TotalLoss(Graph<T> &g, const ForwardOutputs &out, const PaddedBatch<T> &batch,
                    const LossWeights &w, double sigma_g,
                    double pos_weight = kStopPositiveWeight);

}  // namespace atts2s

#endif  // ATTS2S_LOSSES_H_
