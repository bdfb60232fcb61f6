// atts2s/run_config.h

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

// Flat "key = value" run configuration shared by every subcommand.

#ifndef ATTS2S_RUN_CONFIG_H_
#define ATTS2S_RUN_CONFIG_H_

#include <string>
#include <vector>

#include "atts2s/data.h"
#include "atts2s/inference.h"
#include "atts2s/model.h"
#include "atts2s/training.h"

namespace atts2s {

enum class Precision { kF32, kF64 };

struct RunConfig {
  SyntheticTaskConfig synthetic;
  ModelConfig model;
  TrainingConfig training;
  ConvertOptions convert;
  Precision precision = Precision::kF32;
  std::vector<int> mcd_dims;  // empty: all dimensions

  /// Sets one key from its text form. Unknown keys and unparsable values
  /// throw ConfigError; "seed" and "feature_dim" apply to every section that
  /// has them.
  void Set(const std::string &key, const std::string &value);
  void Validate() const;

  /// Every accepted key, in a fixed order.
  static const std::vector<std::string> &Keys();
  static bool IsKey(const std::string &key);

  /// "key = value" lines for every key, parseable by LoadRunConfig.
  std::string Dump() const;
};

/// Reads a config file over `base`. Lines are "key = value"; blank lines and
/// lines starting with '#' are ignored.
RunConfig LoadRunConfig(const std::string &path, RunConfig base = {});

}  // namespace atts2s

#endif  // ATTS2S_RUN_CONFIG_H_
