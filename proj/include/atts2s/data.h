// atts2s/data.h

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

// Feature files, manifests, normalization and the synthetic parallel corpus.

#ifndef ATTS2S_DATA_H_
#define ATTS2S_DATA_H_

#include <cstdint>
#include <string>
#include <vector>

#include "atts2s/errors.h"

namespace atts2s {

/// Frames x dims matrix of acoustic-style features, frame-major.
class FeatureSequence {
 public:
  FeatureSequence() = default;
  FeatureSequence(int frames, int dims)
      : frames_(frames), dims_(dims), values_(std::size_t(frames) * dims, 0.0f) {}
  FeatureSequence(int frames, int dims, std::vector<float> values);

  int frames() const { return frames_; }
  int dims() const { return dims_; }
  bool empty() const { return frames_ == 0; }

  float &operator()(int t, int d) { return values_[std::size_t(t) * dims_ + d]; }
  float operator()(int t, int d) const { return values_[std::size_t(t) * dims_ + d]; }
  const float *frame(int t) const { return values_.data() + std::size_t(t) * dims_; }
  const std::vector<float> &values() const { return values_; }
  std::vector<float> &values() { return values_; }

  bool operator==(const FeatureSequence &) const = default;

 private:
  int frames_ = 0;
  int dims_ = 0;
  std::vector<float> values_;
};

struct ParallelPair {
  FeatureSequence source;
  FeatureSequence target;
};

// Feature file: "ATF1", version byte 0x01, u32 frames, u32 dims (little
// endian), then frames*dims little-endian float32 values, frame-major.
void WriteFeatures(const std::string &path, const FeatureSequence &seq);
FeatureSequence ReadFeatures(const std::string &path);

struct ManifestEntry {
  std::string source_path;
  std::string target_path;
};

/// Lines "source_path<TAB>target_path". Relative paths resolve against the
/// manifest's directory.
std::vector<ManifestEntry> ReadManifest(const std::string &path);
void WriteManifest(const std::string &path, const std::vector<ManifestEntry> &entries);
std::vector<ParallelPair> LoadPairs(const std::string &manifest_path);

struct SyntheticTaskConfig {
  int feature_dim = 8;
  int min_length = 20;
  int max_length = 60;
  double rho_min = 0.7;
  double rho_max = 1.3;
  double noise_std = 0.01;
  int pairs = 2000;
  int test_pairs = 0;
  bool identity_transform = false;  // M = I and c = 0
  std::uint64_t seed = 1;

  void Validate() const;
};

/// What the generator drew; enough to recompute every noiseless target.
struct GroundTruth {
  int dims = 0;
  std::vector<double> transform;  // dims x dims, row-major
  std::vector<double> bias;       // dims
  std::vector<double> rho;        // per pair
};

struct SyntheticDataset {
  std::vector<ParallelPair> pairs;  // training pairs first, then test pairs
  GroundTruth truth;
};

/// Source frames are sums of three sinusoids per dimension with random phase
/// and amplitude (|x| <= 1). Each dimension has fixed canonical periods; a
/// pair with warp factor rho plays them rho times faster, so the stretched
/// target always returns to the canonical tempo and rho is recoverable from
/// the source. Targets are WarpTransform(source) plus clipped Gaussian noise.
SyntheticDataset GenerateSynthetic(const SyntheticTaskConfig &cfg);

/// Y = time-warp of (M x_t + c) to round(rho * T) frames by linear
/// interpolation, endpoints aligned.
FeatureSequence WarpTransform(const FeatureSequence &source, const GroundTruth &truth,
                              double rho);

int WarpedLength(int frames, double rho);

void WriteGroundTruth(const std::string &path, const GroundTruth &truth);
GroundTruth ReadGroundTruth(const std::string &path);

/// Per-dimension z-normalization statistics, source and target separately.
struct NormStats {
  std::vector<double> source_mean, source_std;
  std::vector<double> target_mean, target_std;
};

constexpr double kStdFloor = 1e-6;

NormStats ComputeNorm(const std::vector<ParallelPair> &pairs);
FeatureSequence ApplyNorm(const FeatureSequence &seq, const std::vector<double> &mean,
                          const std::vector<double> &stddev);
FeatureSequence InvertNorm(const FeatureSequence &seq, const std::vector<double> &mean,
                           const std::vector<double> &stddev);
std::vector<ParallelPair> NormalizePairs(const std::vector<ParallelPair> &pairs,
                                         const NormStats &stats);

/// Writes pair files, manifest.tsv and groundtruth.tsv (plus the test_
/// variants when cfg.test_pairs > 0) into `dir`.
void WriteSyntheticDataset(const std::string &dir, const SyntheticDataset &data,
                           const SyntheticTaskConfig &cfg);

}  // namespace atts2s

#endif  // ATTS2S_DATA_H_
