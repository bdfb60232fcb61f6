// atts2s/inference.h

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

#ifndef ATTS2S_INFERENCE_H_
#define ATTS2S_INFERENCE_H_

#include <string>

#include "atts2s/model.h"

namespace atts2s {

struct ConvertOptions {
  double max_ratio = 3.0;
  double stop_threshold = 0.5;
  /// When set, the target encoder reads the groups of this sequence instead
  /// of the generated frames and decoding runs for exactly ceil(J/r) steps.
  const FeatureSequence *teacher = nullptr;

  void Validate() const;
};

struct DecodeResult {
  FeatureSequence output;  // steps_taken * r frames
  Tensor<double> attention;  // I x steps_taken
  Tensor<double> stop_probs; // steps_taken
  int steps_taken = 0;
  bool stopped_naturally = false;
};

/// Autoregressive conversion of one (normalized) source sequence.
template <typename T>
DecodeResult Convert(const FeatureSequence &source, const ParameterSet<T> &params,
                     const ModelConfig &cfg, const ConvertOptions &opts = {});

/// ceil(max_ratio * I / r)
int StepCap(int source_frames, int reduction_factor, double max_ratio);

enum class AttentionFormat { kPgm, kCsv };

/// PGM: binary 8-bit graymap, one image row per source frame, pixel value
/// round(255 a / max(A)). CSV: one line per source frame, %.17g values.
void ExportAttention(const Tensor<double> &attention, const std::string &path,
                     AttentionFormat format);

/// Format from the file extension (.pgm or .csv); ConfigError otherwise.
AttentionFormat AttentionFormatFromPath(const std::string &path);

}  // namespace atts2s

#endif  // ATTS2S_INFERENCE_H_
