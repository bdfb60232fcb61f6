// src/data.cc

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

#include "atts2s/data.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "atts2s/random.h"
#include "binary_io.h"

namespace atts2s {

namespace fs = std::filesystem;

namespace {

constexpr char kFeatureMagic[] = "ATF1";
constexpr std::uint8_t kFeatureVersion = 1;
constexpr int kSinusoids = 3;

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double ParseDouble(const std::string &s, const std::string &where) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw FormatError(where + ": bad number '" + s + "'", 0);
  return v;
}

std::vector<std::string> SplitTabs(const std::string &line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

double ConditionNumber(const std::vector<double> &m, int d) {
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = m[std::size_t(i) * d + j];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto &s = svd.singularValues();
  if (s(d - 1) <= 0) return std::numeric_limits<double>::infinity();
  return s(0) / s(d - 1);
}

}  // namespace

FeatureSequence::FeatureSequence(int frames, int dims, std::vector<float> values)
    : frames_(frames), dims_(dims), values_(std::move(values)) {
  if (frames < 0 || dims < 0 || values_.size() != std::size_t(frames) * dims)
    throw DimensionError("feature sequence " + std::to_string(frames) + "x" +
                         std::to_string(dims) + " with " + std::to_string(values_.size()) +
                         " values");
}

void WriteFeatures(const std::string &path, const FeatureSequence &seq) {
  if (seq.frames() <= 0 || seq.dims() <= 0)
    throw EmptyInputError("refusing to write feature file with zero frames or dims: " + path);
  binio::Writer w;
  w.Bytes(kFeatureMagic, 4);
  w.U8(kFeatureVersion);
  w.U32(std::uint32_t(seq.frames()));
  w.U32(std::uint32_t(seq.dims()));
  for (float v : seq.values()) w.F32(v);
  w.Save(path);
}

FeatureSequence ReadFeatures(const std::string &path) {
  const auto buf = binio::ReadFile(path);
  binio::Reader r(buf, path);
  if (r.Chars(4, "magic") != std::string(kFeatureMagic, 4))
    throw FormatError(path + ": bad magic, not a feature file", 0);
  const int version = r.U8("version");
  if (version != kFeatureVersion) throw UnsupportedVersionError(version, 4);
  const std::uint32_t frames = r.U32("frame count");
  const std::uint32_t dims = r.U32("dimension count");
  if (frames == 0 || dims == 0)
    throw FormatError(path + ": zero frames or dimensions", (long long)r.offset());
  const std::uint64_t need = std::uint64_t(frames) * dims * 4;
  if (r.remaining() != need)
    throw FormatError(path + ": payload has " + std::to_string(r.remaining()) +
                          " bytes, header implies " + std::to_string(need) + " (truncated)",
                      (long long)r.offset());
  std::vector<float> values(std::size_t(frames) * dims);
  for (float &v : values) v = r.F32("payload");
  return FeatureSequence(int(frames), int(dims), std::move(values));
}

std::vector<ManifestEntry> ReadManifest(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path);
  const fs::path base = fs::path(path).parent_path();
  std::vector<ManifestEntry> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto parts = SplitTabs(line);
    if (parts.size() != 2)
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected source<TAB>target", 0);
    auto resolve = [&](const std::string &p) {
      fs::path q(p);
      return (q.is_absolute() ? q : base / q).string();
    };
    out.push_back({resolve(parts[0]), resolve(parts[1])});
  }
  return out;
}

void WriteManifest(const std::string &path, const std::vector<ManifestEntry> &entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto &e : entries) out << e.source_path << '\t' << e.target_path << '\n';
  if (!out) throw IoError("write failed for " + path);
}

std::vector<ParallelPair> LoadPairs(const std::string &manifest_path) {
  std::vector<ParallelPair> pairs;
  for (const auto &e : ReadManifest(manifest_path))
    pairs.push_back({ReadFeatures(e.source_path), ReadFeatures(e.target_path)});
  if (pairs.empty()) throw EmptyInputError("manifest " + manifest_path + " lists no pairs");
  return pairs;
}

void SyntheticTaskConfig::Validate() const {
  if (feature_dim < 1) throw ConfigError("feature_dim must be >= 1");
  if (min_length < 2) throw ConfigError("min_length must be >= 2");
  if (max_length < min_length) throw ConfigError("max_length must be >= min_length");
  if (!(rho_min > 0)) throw ConfigError("rho_min must be > 0");
  if (!(rho_max >= rho_min)) throw ConfigError("rho_max must be >= rho_min");
  if (!(noise_std >= 0)) throw ConfigError("noise_std must be >= 0");
  if (pairs < 1) throw ConfigError("pairs must be >= 1");
  if (test_pairs < 0) throw ConfigError("test_pairs must be >= 0");
}

int WarpedLength(int frames, double rho) {
  return std::max(1, int(std::lround(rho * frames)));
}

FeatureSequence WarpTransform(const FeatureSequence &source, const GroundTruth &truth,
                              double rho) {
  const int n = source.frames(), d = source.dims();
  if (n == 0) throw EmptyInputError("cannot warp an empty sequence");
  if (d != truth.dims) throw DimensionError("warp: source dims vs ground-truth dims");
  std::vector<double> z(std::size_t(n) * d);
  for (int t = 0; t < n; ++t)
    for (int i = 0; i < d; ++i) {
      double s = truth.bias[i];
      for (int j = 0; j < d; ++j) s += truth.transform[std::size_t(i) * d + j] * source(t, j);
      z[std::size_t(t) * d + i] = s;
    }
  const int m = WarpedLength(n, rho);
  FeatureSequence out(m, d);
  for (int s = 0; s < m; ++s) {
    const double u = m == 1 ? 0.0 : double(s) * double(n - 1) / double(m - 1);
    const int lo = std::min(int(std::floor(u)), n - 1);
    const double frac = u - lo;
    for (int i = 0; i < d; ++i) {
      const double a = z[std::size_t(lo) * d + i];
      const double v = frac == 0.0 ? a : a * (1.0 - frac) + z[std::size_t(lo + 1) * d + i] * frac;
      out(s, i) = float(v);
    }
  }
  return out;
}

SyntheticDataset GenerateSynthetic(const SyntheticTaskConfig &cfg) {
  cfg.Validate();
  const int d = cfg.feature_dim;
  Rng global(cfg.seed);
  SyntheticDataset data;
  GroundTruth &truth = data.truth;
  truth.dims = d;

  std::vector<double> periods(std::size_t(d) * kSinusoids);
  for (double &p : periods) p = global.Uniform(12.0, 40.0);

  if (cfg.identity_transform) {
    truth.transform.assign(std::size_t(d) * d, 0.0);
    for (int i = 0; i < d; ++i) truth.transform[std::size_t(i) * d + i] = 1.0;
    truth.bias.assign(d, 0.0);
  } else {
    do {
      truth.transform.assign(std::size_t(d) * d, 0.0);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          truth.transform[std::size_t(i) * d + j] =
              (i == j ? 1.0 : 0.0) + 0.3 * global.Normal() / std::sqrt(double(d));
    } while (!(ConditionNumber(truth.transform, d) < 100.0));
    truth.bias.resize(d);
    for (double &c : truth.bias) c = global.Uniform(-0.5, 0.5);
  }

  const int total = cfg.pairs + cfg.test_pairs;
  data.pairs.resize(total);
  truth.rho.resize(total);
  for (int k = 0; k < total; ++k) {
    Rng rng(cfg.seed, std::uint64_t(k));
    const int n = rng.UniformInt(cfg.min_length, cfg.max_length);
    const double rho = rng.Uniform(cfg.rho_min, cfg.rho_max);
    FeatureSequence x(n, d);
    for (int i = 0; i < d; ++i) {
      double amp[kSinusoids], phase[kSinusoids];
      for (int s = 0; s < kSinusoids; ++s) {
        amp[s] = rng.Uniform(0.5, 1.0) / kSinusoids;
        phase[s] = rng.Uniform(0.0, 2.0 * std::numbers::pi);
      }
      for (int t = 0; t < n; ++t) {
        double v = 0;
        for (int s = 0; s < kSinusoids; ++s)
          v += amp[s] * std::sin(2.0 * std::numbers::pi * rho * t /
                                     periods[std::size_t(i) * kSinusoids + s] +
                                 phase[s]);
        x(t, i) = float(v);
      }
    }
    FeatureSequence y = WarpTransform(x, truth, rho);
    if (cfg.noise_std > 0)
      for (float &v : y.values())
        v = float(double(v) + cfg.noise_std * std::clamp(rng.Normal(), -5.0, 5.0));
    data.pairs[k] = {std::move(x), std::move(y)};
    truth.rho[k] = rho;
  }
  return data;
}

void WriteGroundTruth(const std::string &path, const GroundTruth &truth) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "pair_index\trho\n";
  for (std::size_t k = 0; k < truth.rho.size(); ++k)
    out << k << '\t' << FormatDouble(truth.rho[k]) << '\n';
  out << "M\n";
  for (int i = 0; i < truth.dims; ++i) {
    for (int j = 0; j < truth.dims; ++j)
      out << (j ? "\t" : "") << FormatDouble(truth.transform[std::size_t(i) * truth.dims + j]);
    out << '\n';
  }
  out << "c\n";
  for (int i = 0; i < truth.dims; ++i) out << (i ? "\t" : "") << FormatDouble(truth.bias[i]);
  out << '\n';
  if (!out) throw IoError("write failed for " + path);
}

GroundTruth ReadGroundTruth(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  GroundTruth truth;
  std::size_t k = 0;
  if (k < lines.size() && lines[k] == "pair_index\trho") ++k;
  for (; k < lines.size() && lines[k] != "M"; ++k) {
    const auto parts = SplitTabs(lines[k]);
    if (parts.size() != 2) throw FormatError(path + ": bad rho line '" + lines[k] + "'", 0);
    truth.rho.push_back(ParseDouble(parts[1], path));
  }
  if (k == lines.size()) throw FormatError(path + ": missing M block", 0);
  ++k;
  std::vector<std::vector<double>> rows;
  for (; k < lines.size() && lines[k] != "c"; ++k) {
    std::vector<double> row;
    for (const auto &p : SplitTabs(lines[k])) row.push_back(ParseDouble(p, path));
    rows.push_back(std::move(row));
  }
  if (k + 1 >= lines.size()) throw FormatError(path + ": missing c block", 0);
  truth.dims = int(rows.size());
  for (const auto &row : rows) {
    if (int(row.size()) != truth.dims) throw FormatError(path + ": M is not square", 0);
    truth.transform.insert(truth.transform.end(), row.begin(), row.end());
  }
  for (const auto &p : SplitTabs(lines[k + 1])) truth.bias.push_back(ParseDouble(p, path));
  if (int(truth.bias.size()) != truth.dims) throw FormatError(path + ": c length != dims", 0);
  return truth;
}

NormStats ComputeNorm(const std::vector<ParallelPair> &pairs) {
  if (pairs.empty()) throw EmptyInputError("cannot compute normalization of an empty set");
  auto stats = [](const std::vector<const FeatureSequence *> &seqs, std::vector<double> &mean,
                  std::vector<double> &stddev) {
    const int d = seqs.front()->dims();
    std::vector<double> sum(d, 0.0), sq(d, 0.0);
    double count = 0;
    for (const FeatureSequence *s : seqs) {
      if (s->dims() != d) throw DimensionError("inconsistent feature dims in training set");
      for (int t = 0; t < s->frames(); ++t)
        for (int i = 0; i < d; ++i) sum[i] += (*s)(t, i);
      count += s->frames();
    }
    if (count == 0) throw EmptyInputError("training set has no frames");
    mean.resize(d);
    for (int i = 0; i < d; ++i) mean[i] = sum[i] / count;
    for (const FeatureSequence *s : seqs)
      for (int t = 0; t < s->frames(); ++t)
        for (int i = 0; i < d; ++i) {
          const double c = (*s)(t, i) - mean[i];
          sq[i] += c * c;
        }
    stddev.resize(d);
    for (int i = 0; i < d; ++i) stddev[i] = std::max(std::sqrt(sq[i] / count), kStdFloor);
  };
  std::vector<const FeatureSequence *> src, tgt;
  for (const auto &p : pairs) {
    src.push_back(&p.source);
    tgt.push_back(&p.target);
  }
  NormStats out;
  stats(src, out.source_mean, out.source_std);
  stats(tgt, out.target_mean, out.target_std);
  return out;
}

FeatureSequence ApplyNorm(const FeatureSequence &seq, const std::vector<double> &mean,
                          const std::vector<double> &stddev) {
  if (std::size_t(seq.dims()) != mean.size() || mean.size() != stddev.size())
    throw DimensionError("normalization statistics do not match feature dims");
  FeatureSequence out(seq.frames(), seq.dims());
  for (int t = 0; t < seq.frames(); ++t)
    for (int i = 0; i < seq.dims(); ++i) out(t, i) = float((seq(t, i) - mean[i]) / stddev[i]);
  return out;
}

FeatureSequence InvertNorm(const FeatureSequence &seq, const std::vector<double> &mean,
                           const std::vector<double> &stddev) {
  if (std::size_t(seq.dims()) != mean.size() || mean.size() != stddev.size())
    throw DimensionError("normalization statistics do not match feature dims");
  FeatureSequence out(seq.frames(), seq.dims());
  for (int t = 0; t < seq.frames(); ++t)
    for (int i = 0; i < seq.dims(); ++i) out(t, i) = float(seq(t, i) * stddev[i] + mean[i]);
  return out;
}

std::vector<ParallelPair> NormalizePairs(const std::vector<ParallelPair> &pairs,
                                         const NormStats &stats) {
  std::vector<ParallelPair> out;
  out.reserve(pairs.size());
  for (const auto &p : pairs)
    out.push_back({ApplyNorm(p.source, stats.source_mean, stats.source_std),
                   ApplyNorm(p.target, stats.target_mean, stats.target_std)});
  return out;
}

void WriteSyntheticDataset(const std::string &dir, const SyntheticDataset &data,
                           const SyntheticTaskConfig &cfg) {
  fs::create_directories(dir);
  auto write_split = [&](const std::string &prefix, int begin, int end) {
    std::vector<ManifestEntry> entries;
    GroundTruth truth = data.truth;
    truth.rho.assign(data.truth.rho.begin() + begin, data.truth.rho.begin() + end);
    for (int k = begin; k < end; ++k) {
      char name[32];
      std::snprintf(name, sizeof(name), "%05d", k - begin);
      const std::string src = prefix + "src_" + name + ".atf";
      const std::string tgt = prefix + "tgt_" + name + ".atf";
      WriteFeatures((fs::path(dir) / src).string(), data.pairs[k].source);
      WriteFeatures((fs::path(dir) / tgt).string(), data.pairs[k].target);
      entries.push_back({src, tgt});
    }
    WriteManifest((fs::path(dir) / (prefix + "manifest.tsv")).string(), entries);
    WriteGroundTruth((fs::path(dir) / (prefix + "groundtruth.tsv")).string(), truth);
  };
  write_split("", 0, cfg.pairs);
  if (cfg.test_pairs > 0) write_split("test_", cfg.pairs, cfg.pairs + cfg.test_pairs);
}

}  // namespace atts2s
