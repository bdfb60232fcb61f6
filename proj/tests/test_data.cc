// tests/test_data.cc

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>

#include "atts2s/data.h"
#include "test_util.h"

using namespace atts2s;
using atts2s::testing::RandomSequence;
using atts2s::testing::TempDir;

namespace {

std::string Slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void Spit(const std::string &path, const std::string &bytes) {
  std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes;
}

bool BitEqual(const FeatureSequence &a, const FeatureSequence &b) {
  return a.frames() == b.frames() && a.dims() == b.dims() &&
         std::memcmp(a.values().data(), b.values().data(), a.values().size() * 4) == 0;
}

SyntheticTaskConfig SmallTask() {
  SyntheticTaskConfig cfg;
  cfg.feature_dim = 4;
  cfg.pairs = 30;
  cfg.test_pairs = 5;
  cfg.seed = 17;
  return cfg;
}

}  // namespace

TEST_CASE("feature files") {
  const std::string dir = TempDir("features");
  Rng rng(1);
  SUBCASE("round trip is bit exact") {
    FeatureSequence x = RandomSequence(7, 3, rng);
    x(0, 0) = -0.0f;
    x(1, 1) = std::numeric_limits<float>::denorm_min();
    x(2, 2) = std::numeric_limits<float>::max();
    WriteFeatures(dir + "/x.atf", x);
    CHECK(BitEqual(ReadFeatures(dir + "/x.atf"), x));
    const std::string bytes = Slurp(dir + "/x.atf");
    CHECK(bytes.size() == 4 + 1 + 4 + 4 + 7 * 3 * 4);
    CHECK(bytes.substr(0, 4) == "ATF1");
    CHECK(int(bytes[4]) == 1);
    std::uint32_t frames, dims;
    std::memcpy(&frames, bytes.data() + 5, 4);
    std::memcpy(&dims, bytes.data() + 9, 4);
    CHECK(frames == 7);
    CHECK(dims == 3);
    float first;
    std::memcpy(&first, bytes.data() + 13 + 4, 4);
    CHECK(first == x(0, 1));
  }
  SUBCASE("zero frames are refused") {
    CHECK_THROWS_AS(WriteFeatures(dir + "/e.atf", FeatureSequence()), EmptyInputError);
  }
  SUBCASE("corruption") {
    WriteFeatures(dir + "/x.atf", RandomSequence(5, 2, rng));
    const std::string bytes = Slurp(dir + "/x.atf");
    std::string bad = bytes;
    bad.replace(0, 4, "XXXX");
    Spit(dir + "/m.atf", bad);
    CHECK_THROWS_AS(ReadFeatures(dir + "/m.atf"), FormatError);
    bad = bytes;
    bad[4] = 7;
    Spit(dir + "/v.atf", bad);
    CHECK_THROWS_AS(ReadFeatures(dir + "/v.atf"), UnsupportedVersionError);
    for (std::size_t n = 0; n < bytes.size(); ++n) {
      Spit(dir + "/t.atf", bytes.substr(0, n));
      CHECK_THROWS_AS(ReadFeatures(dir + "/t.atf"), FormatError);
    }
    Spit(dir + "/l.atf", bytes + "1234");
    CHECK_THROWS_AS(ReadFeatures(dir + "/l.atf"), FormatError);
    CHECK_THROWS_AS(ReadFeatures(dir + "/none.atf"), IoError);
  }
}

TEST_CASE("manifests") {
  const std::string dir = TempDir("manifest");
  Rng rng(2);
  std::filesystem::create_directories(dir + "/sub");
  std::vector<ManifestEntry> entries;
  std::vector<ParallelPair> expected;
  for (int k = 0; k < 4; ++k) {
    const std::string s = "sub/s" + std::to_string(k) + ".atf";
    const std::string t = "sub/t" + std::to_string(k) + ".atf";
    expected.push_back({RandomSequence(3 + k, 2, rng), RandomSequence(5 - k, 2, rng)});
    WriteFeatures(dir + "/" + s, expected.back().source);
    WriteFeatures(dir + "/" + t, expected.back().target);
    entries.push_back({s, t});
  }
  WriteManifest(dir + "/m.tsv", entries);
  CHECK(Slurp(dir + "/m.tsv").substr(0, 22) == "sub/s0.atf\tsub/t0.atf\n");
  const auto pairs = LoadPairs(dir + "/m.tsv");
  REQUIRE(pairs.size() == 4);
  for (int k = 0; k < 4; ++k) {
    CHECK(BitEqual(pairs[k].source, expected[k].source));
    CHECK(BitEqual(pairs[k].target, expected[k].target));
  }
  Spit(dir + "/bad.tsv", "only_one_column\n");
  CHECK_THROWS_AS(ReadManifest(dir + "/bad.tsv"), FormatError);
  Spit(dir + "/empty.tsv", "");
  CHECK_THROWS_AS(LoadPairs(dir + "/empty.tsv"), EmptyInputError);
  CHECK_THROWS_AS(ReadManifest(dir + "/none.tsv"), IoError);
}

TEST_CASE("synthetic generator") {
  SUBCASE("identity task copies the source") {
    SyntheticTaskConfig cfg = SmallTask();
    cfg.rho_min = cfg.rho_max = 1.0;
    cfg.noise_std = 0.0;
    cfg.identity_transform = true;
    for (const auto &p : GenerateSynthetic(cfg).pairs) CHECK(BitEqual(p.source, p.target));
  }
  SUBCASE("length contract") {
    SyntheticTaskConfig cfg = SmallTask();
    cfg.rho_min = cfg.rho_max = 0.5;
    cfg.min_length = cfg.max_length = 40;
    for (const auto &p : GenerateSynthetic(cfg).pairs) {
      CHECK(p.source.frames() == 40);
      CHECK(p.target.frames() == 20);
    }
    CHECK(WarpedLength(40, 1.3) == 52);
    CHECK(WarpedLength(1, 0.1) == 1);
  }
  SUBCASE("fixed seed gives identical bytes") {
    const std::string a = TempDir("gen_a"), b = TempDir("gen_b");
    WriteSyntheticDataset(a, GenerateSynthetic(SmallTask()), SmallTask());
    WriteSyntheticDataset(b, GenerateSynthetic(SmallTask()), SmallTask());
    int files = 0;
    for (const auto &e : std::filesystem::directory_iterator(a)) {
      const auto name = e.path().filename().string();
      CHECK(Slurp(e.path().string()) == Slurp(b + "/" + name));
      ++files;
    }
    CHECK(files == 2 * 35 + 4);
    SyntheticTaskConfig other = SmallTask();
    other.seed = 18;
    CHECK_FALSE(BitEqual(GenerateSynthetic(other).pairs[0].source,
                         GenerateSynthetic(SmallTask()).pairs[0].source));
  }
  SUBCASE("ranges, bounds and ground truth") {
    SyntheticTaskConfig cfg = SmallTask();
    cfg.noise_std = 0.05;
    const SyntheticDataset data = GenerateSynthetic(cfg);
    const GroundTruth &gt = data.truth;
    const int d = cfg.feature_dim;
    double norm_inf = 0, cmax = 0;
    for (int i = 0; i < d; ++i) {
      double row = 0;
      for (int j = 0; j < d; ++j) row += std::fabs(gt.transform[i * d + j]);
      norm_inf = std::max(norm_inf, row);
      cmax = std::max(cmax, std::fabs(gt.bias[i]));
    }
    const double bound = norm_inf + cmax + 5 * cfg.noise_std;
    REQUIRE(data.pairs.size() == 35);
    for (std::size_t k = 0; k < data.pairs.size(); ++k) {
      const auto &p = data.pairs[k];
      CHECK(p.source.frames() >= cfg.min_length);
      CHECK(p.source.frames() <= cfg.max_length);
      CHECK(gt.rho[k] >= cfg.rho_min);
      CHECK(gt.rho[k] <= cfg.rho_max);
      CHECK(p.target.frames() == WarpedLength(p.source.frames(), gt.rho[k]));
      for (float v : p.source.values()) CHECK(std::fabs(v) <= 1.0f);
      for (float v : p.target.values()) {
        CHECK(std::isfinite(v));
        CHECK(std::fabs(v) <= bound);
      }
    }
  }
  SUBCASE("ground truth recomputes noiseless targets") {
    SyntheticTaskConfig cfg = SmallTask();
    cfg.noise_std = 0.0;
    const SyntheticDataset data = GenerateSynthetic(cfg);
    const std::string dir = TempDir("truth");
    WriteGroundTruth(dir + "/g.tsv", data.truth);
    const GroundTruth back = ReadGroundTruth(dir + "/g.tsv");
    CHECK(back.transform == data.truth.transform);
    CHECK(back.bias == data.truth.bias);
    CHECK(back.rho == data.truth.rho);
    for (std::size_t k = 0; k < data.pairs.size(); ++k)
      CHECK(BitEqual(WarpTransform(data.pairs[k].source, back, back.rho[k]), data.pairs[k].target));
  }
  SUBCASE("interpolation by hand") {
    GroundTruth gt;
    gt.dims = 1;
    gt.transform = {2.0};
    gt.bias = {1.0};
    const FeatureSequence x(3, 1, {0.0f, 1.0f, 4.0f});
    // z = {1, 3, 9}; five output frames at u = 0, .5, 1, 1.5, 2
    const FeatureSequence y = WarpTransform(x, gt, 5.0 / 3.0);
    CHECK(y.values() == std::vector<float>{1, 2, 3, 6, 9});
  }
  SUBCASE("invalid configs") {
    SyntheticTaskConfig cfg = SmallTask();
    cfg.min_length = 1;
    CHECK_THROWS_AS(GenerateSynthetic(cfg), ConfigError);
    cfg = SmallTask();
    cfg.rho_min = 0;
    CHECK_THROWS_AS(GenerateSynthetic(cfg), ConfigError);
    cfg = SmallTask();
    cfg.max_length = 10;
    CHECK_THROWS_AS(GenerateSynthetic(cfg), ConfigError);
  }
}

TEST_CASE("normalization") {
  Rng rng(3);
  std::vector<ParallelPair> pairs;
  for (int k = 0; k < 6; ++k) {
    FeatureSequence x = RandomSequence(5 + k, 3, rng, 2.0), y = RandomSequence(4 + k, 3, rng, 0.3);
    for (int t = 0; t < x.frames(); ++t) x(t, 2) = 7.5f;  // constant dimension
    for (int t = 0; t < y.frames(); ++t) y(t, 0) += 10.0f;
    pairs.push_back({x, y});
  }
  const NormStats st = ComputeNorm(pairs);
  CHECK(st.source_std[2] == kStdFloor);
  CHECK(st.source_mean[2] == 7.5);
  CHECK(std::fabs(st.target_mean[0] - 10.0) < 1.0);
  const auto norm = NormalizePairs(pairs, st);
  for (const auto &p : norm)
    for (int t = 0; t < p.source.frames(); ++t) CHECK(p.source(t, 2) == 0.0f);
  // per-dimension mean recomputed directly
  for (int side = 0; side < 2; ++side)
    for (int i = 0; i < 3; ++i) {
      double s = 0, n = 0;
      for (const auto &p : norm) {
        const FeatureSequence &q = side ? p.target : p.source;
        for (int t = 0; t < q.frames(); ++t) s += q(t, i);
        n += q.frames();
      }
      CHECK(std::fabs(s / n) < 1e-6);
    }
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const FeatureSequence back = InvertNorm(norm[k].target, st.target_mean, st.target_std);
    for (std::size_t e = 0; e < back.values().size(); ++e)
      CHECK(std::fabs(back.values()[e] - pairs[k].target.values()[e]) < 1e-5);
    const FeatureSequence back_src = InvertNorm(norm[k].source, st.source_mean, st.source_std);
    for (std::size_t e = 0; e < back_src.values().size(); ++e)
      CHECK(std::fabs(back_src.values()[e] - pairs[k].source.values()[e]) <=
            1e-6 * std::max(1.0f, std::fabs(pairs[k].source.values()[e])));
  }
  CHECK_THROWS_AS(ComputeNorm({}), EmptyInputError);
  CHECK_THROWS_AS(ApplyNorm(pairs[0].source, {0, 0}, {1, 1}), DimensionError);
}
