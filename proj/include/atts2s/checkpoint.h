// atts2s/checkpoint.h

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

// Checkpoint file: "AS2S", version byte 0x01, u32 record count, records, u64
// global step. A record is u16 name length, name, u8 rank, rank x u32 dims and
// the float32 payload, all little-endian.
//
// Parameters are stored under their own names and the Adam moments as
// "<param>.m" and "<param>.v". Configuration values ("config.<key>") and
// normalization statistics ("norm.<field>") are doubles; each double is kept
// exactly by storing its 64 bits as two consecutive 32-bit words, low word
// first, so a record of n doubles has dims {n, 2}.

#ifndef ATTS2S_CHECKPOINT_H_
#define ATTS2S_CHECKPOINT_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "atts2s/data.h"
#include "atts2s/model.h"
#include "atts2s/parameter_set.h"

namespace atts2s {

constexpr std::uint8_t kCheckpointVersion = 0x01;

struct Checkpoint {
  std::vector<std::pair<std::string, double>> config;
  ParameterSet<float> params;
  std::vector<Tensor<float>> adam_m, adam_v;  // parameter order; may be empty
  std::uint64_t step = 0;
  NormStats norm;  // empty vectors when absent

  bool HasConfig(const std::string &key) const;
  double Config(const std::string &key) const;  // throws ConfigError if missing
};

void SaveCheckpoint(const std::string &path, const Checkpoint &ckpt);

/// Throws IoError when unreadable, FormatError (with byte offset) on a bad
/// magic, truncation or malformed record, UnsupportedVersionError on an
/// unknown version byte. Nothing is returned on failure.
Checkpoint LoadCheckpoint(const std::string &path);

void StoreModelConfig(Checkpoint &ckpt, const ModelConfig &cfg);
ModelConfig LoadModelConfig(const Checkpoint &ckpt);

/// Checks that the stored parameters match the shapes `cfg` implies.
void CheckParameters(const Checkpoint &ckpt, const ModelConfig &cfg);

/// The checkpoint parameters converted to the compute precision.
template <typename T>
ParameterSet<T> CheckpointParameters(const Checkpoint &ckpt);

}  // namespace atts2s

#endif  // ATTS2S_CHECKPOINT_H_
