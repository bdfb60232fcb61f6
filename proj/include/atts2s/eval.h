// atts2s/eval.h

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

// Objective measures: DTW-aligned distortion, mel-cepstral distortion,
// attention diagonality and duration-ratio recovery.

#ifndef ATTS2S_EVAL_H_
#define ATTS2S_EVAL_H_

#include <string>
#include <utility>
#include <vector>

#include "atts2s/data.h"
#include "atts2s/inference.h"
#include "atts2s/tensor.h"

namespace atts2s {

struct DtwResult {
  double total = 0.0;  // minimal cumulative frame cost
  double cost = 0.0;   // total / (path length * dims): mean per-element cost
  std::vector<std::pair<int, int>> path;  // (index in a, index in b), from (0,0)
};

/// Steps (1,0), (0,1), (1,1); frame cost is the L1 distance. Among paths of
/// equal total the diagonal step is preferred.
DtwResult DtwAlign(const FeatureSequence &a, const FeatureSequence &b);

/// (10 sqrt(2) / ln 10) times the mean Euclidean distance over `dims` along
/// the DTW path computed with that same distance.
double Mcd(const FeatureSequence &a, const FeatureSequence &b, const std::vector<int> &dims);

/// (1/J) sum_j |argmax_i(a_ij) / I - j / J| with 1-based i and j; ties go to
/// the smaller i.
double DiagonalityDeviation(const Tensor<double> &attention);

/// |steps * r / (rho * I) - 1|
double DurationRatioError(int steps_taken, int reduction_factor, int source_frames,
                          double rho);

constexpr double kDurationTolerance = 0.15;

struct PairEval {
  double dtw_l1 = 0.0;
  double mcd_db = 0.0;
  double diagonality_deviation = 0.0;
  double duration_ratio_error = 0.0;
  int source_frames = 0;
  int output_frames = 0;
  int steps_taken = 0;
  bool stopped_naturally = false;
};

struct EvalReport {
  std::vector<PairEval> pairs;
  double mean_dtw_l1 = 0.0;
  double mean_mcd_db = 0.0;
  double mean_diagonality_deviation = 0.0;
  double mean_duration_ratio_error = 0.0;
  double duration_pass_fraction = 0.0;  // share with error <= kDurationTolerance
  double stopped_naturally_fraction = 0.0;

  void Aggregate();
};

/// Converts every test source (raw features; normalized with `norm` before
/// decoding, output mapped back) and scores it against the raw target.
/// `rho` gives the true warp factor of each pair; empty `mcd_dims` means all.
template <typename T>
EvalReport EvaluateConversion(const std::vector<ParallelPair> &pairs,
                              const std::vector<double> &rho, const ParameterSet<T> &params,
                              const ModelConfig &cfg, const NormStats &norm,
                              const ConvertOptions &opts, std::vector<int> mcd_dims = {});

/// "key: value" lines per pair, then an "aggregate:" block.
void WriteReport(const std::string &path, const EvalReport &report);
std::string FormatReport(const EvalReport &report);

}  // namespace atts2s

#endif  // ATTS2S_EVAL_H_
